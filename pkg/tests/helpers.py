import numpy as np


def mean_se(samples):
    samples = np.asarray(samples, dtype=float)
    return samples.mean(), samples.std(ddof=1) / np.sqrt(len(samples))


def assert_within_se(samples, target, k=4.0):
    m, se = mean_se(samples)
    assert abs(m - target) <= k * se, f"mean {m} vs {target}, se {se}"
