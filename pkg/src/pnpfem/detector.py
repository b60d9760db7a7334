"""Shock detector: per-node extremum indicator in [0, 1].

The detector compares, over all neighbors j of node i, directional slopes
taken through j and through the symmetric point of j on the star boundary.
At a strict local extremum every slope pair has one sign, the ratio of jump
to mean magnitudes is exactly one and the detector saturates at 1; smooth
data make the jumps cancel and drive it to 0.
"""

import numpy as np

DENOMINATOR_TOL = 1e-14


def _pair_slopes(x, mesh, stencil):
    """Per directed pair: (x_j - x_i)/r and (x_sym - x_i)/r_sym."""
    x = np.asarray(x, dtype=float)
    dxj = x[mesh.pair_j] - x[mesh.pair_i]
    dxs = stencil.eval_at_sym(x) - x[mesh.pair_i]
    return dxj / stencil.r_len, dxs / stencil.r_sym_len


def jump(i, j, x, stencil):
    """Directional slope jump of the pair (i, j): both slopes added."""
    mesh = stencil.mesh
    p = mesh.pair_index(i, j)
    s1, s2 = _pair_slopes(x, mesh, stencil)
    return float(s1[p] + s2[p])


def mean(i, j, x, stencil):
    """Directional slope mean of the pair (i, j): half-sum of magnitudes."""
    mesh = stencil.mesh
    p = mesh.pair_index(i, j)
    s1, s2 = _pair_slopes(x, mesh, stencil)
    return float(0.5 * (abs(s1[p]) + abs(s2[p])))


def compute_alpha(x, q, mesh, stencil):
    """Detector values for a nodal field.

    alpha_i = [ |sum_j jump_ij| / sum_j 2 mean_ij ]^q when the denominator
    exceeds an absolute tolerance, else 0; the ratio is clamped to [0, 1]
    before exponentiation to absorb roundoff.

    Parameters
    ----------
    x : (N,) array
        Nodal field.
    q : float
        Positive exponent (2 in all shipped scenarios).

    Returns
    -------
    (N,) array of values in [0, 1].
    """
    if q <= 0:
        raise ValueError(f"detector exponent q must be positive, got {q}")
    s1, s2 = _pair_slopes(x, mesh, stencil)
    jumps = s1 + s2
    two_means = np.abs(s1) + np.abs(s2)
    ptr = mesh.pair_ptr
    num = np.abs(np.add.reduceat(jumps, ptr[:-1]))
    den = np.add.reduceat(two_means, ptr[:-1])
    # reduceat on an empty group returns the next element; guard isolated nodes
    empty = ptr[:-1] == ptr[1:]
    alpha = np.zeros(mesh.num_nodes)
    ok = (den > DENOMINATOR_TOL) & ~empty
    ratio = np.clip(num[ok] / den[ok], 0.0, 1.0)
    alpha[ok] = ratio**q
    return alpha
