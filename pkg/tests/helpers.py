"""Shared reference implementations for the test suite (independent oracles)."""

import numpy as np

from lagmaxwell.laguerre import phi_fourier, window_source_coeffs


def block_triangular_reference(ops, config, omega, r, m_terms):
    """Brute-force transform-domain solve: assemble the block-lower-triangular
    coupling over all coefficients explicitly (double loop, no running
    accumulators) and forward-substitute with dense factorizations.

    Returns (z, [u_0 ... u_{m_terms-1}]).
    """
    eta = config.eta
    c = window_source_coeffs(-omega, config, m_terms)
    phis = phi_fourier(np.arange(m_terms), -omega, eta)
    Bd = ops.B.toarray()
    Ms = ops.M_sigma.toarray()
    Me = ops.M_eps.toarray()
    Mg = ops.M_gamma.toarray()
    n = Bd.shape[0]
    coeffs = []
    z = np.zeros(n, dtype=complex)
    for m in range(m_terms):
        rhs = c[m] * r.astype(complex)
        for k in range(m):
            rhs = rhs + eta * (Ms @ coeffs[k])
            rhs = rhs - eta**2 * (m - k) * (Me @ coeffs[k])
            rhs = rhs - eta * (Mg @ coeffs[k])
        u = np.linalg.solve(Bd, rhs)
        coeffs.append(u)
        z = z + (eta / 2.0) * phis[m] * u
    return z, coeffs
