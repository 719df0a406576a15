"""Random admissible G-function specs shared by the kernel tests."""

import numpy as np

from rissec.meijerg import MeijerGSpec


def _far(x, gap=0.05):
    return abs(x - round(x)) > gap


def random_specs(seed, count, lo=-1.0, hi=2.0):
    """(spec, z) pairs with simple poles, delta > 0 and z log-uniform on [0.1, 10].

    Parameters are rounded to three decimals and kept at least 0.05 away from
    any integer coincidence within a numerator group or across groups.  For
    p == q the argument stays clear of the unit-circle singularity.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        q = int(rng.integers(1, 5))
        p = int(rng.integers(0, q + 1))
        m = int(rng.integers(1, q + 1))
        n = int(rng.integers(0, p + 1))
        if m + n - (p + q) / 2 <= 0:
            continue
        a = tuple(np.round(rng.uniform(lo, hi, p), 3))
        b = tuple(np.round(rng.uniform(lo, hi, q), 3))
        ok = all(_far(b[i] - b[j]) for i in range(m) for j in range(i + 1, m))
        ok &= all(_far(a[i] - a[j]) for i in range(n) for j in range(i + 1, n))
        ok &= all(_far(a[i] - b[j]) for i in range(n) for j in range(m))
        if not ok:
            continue
        z = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        if p == q and abs(np.log(z)) < 0.3:
            continue
        out.append((MeijerGSpec(m, n, a, b), z))
    return out
