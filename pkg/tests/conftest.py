import numpy as np
import pytest

# level-1 names
O, mOa, A, mOb, B, mab = (0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (1, 1)


@pytest.fixture(scope="session")
def level3_walks():
    from ellf.stochastics.automaton import sample_srw_batch
    rng = np.random.default_rng(20240601)
    return sample_srw_batch(1, 3, 500, rng, "W") + sample_srw_batch("1/2", 3, 500, rng, "V")


def chi2_pvalue(counts, probs):
    """Pearson goodness of fit, pooling cells with expected count below 5."""
    from scipy.stats import chi2

    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    n = counts.sum()
    exp = n * probs / probs.sum()
    keep = exp >= 5
    c = list(counts[keep])
    e = list(exp[keep])
    if (~keep).any() and exp[~keep].sum() > 0:
        c.append(counts[~keep].sum())
        e.append(exp[~keep].sum())
    c, e = np.array(c), np.array(e)
    stat = ((c - e) ** 2 / e).sum()
    return float(chi2.sf(stat, len(c) - 1))


def two_sample_pvalue(a: dict, b: dict):
    """Chi-square homogeneity test for two categorical samples."""
    from scipy.stats import chi2_contingency

    keys = sorted(set(a) | set(b))
    table = np.array([[a.get(k, 0) for k in keys], [b.get(k, 0) for k in keys]], dtype=float)
    # pool rare categories
    tot = table.sum(axis=0)
    rare = tot < 10
    if rare.any():
        table = np.column_stack([table[:, ~rare], table[:, rare].sum(axis=1)])
    return float(chi2_contingency(table)[1])
