"""Gaussian numerical primitives: normal cdf/quantile, bivariate normal cdf,
and block-diagonal log-determinants and quadratic forms."""

import numpy as np
from scipy import linalg
from scipy.special import ndtr, ndtri

__all__ = ["phi", "phi_inv", "bvn_cdf", "BlockDiagonal", "logdet_and_quadform",
           "InfeasibleError"]


class InfeasibleError(ValueError):
    """A correlation block is not positive definite."""


def phi(z):
    """Standard normal cdf."""
    return ndtr(z)


def phi_inv(p):
    """Standard normal quantile; ``p`` must lie strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)) or np.any(np.isnan(p)):
        raise ValueError("phi_inv requires probabilities strictly inside (0, 1)")
    out = ndtri(p)
    return out if out.ndim else float(out)


# Gauss-Legendre nodes/weights on (-1, 1), half set (20-point rule).
_GL_X = np.array([
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
    0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
    0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
    0.07652652113349733])
_GL_W = np.array([
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
    0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
    0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
    0.1527533871307259])
_TWOPI = 2.0 * np.pi


def _bvnu_finite(h, k, r):
    """P(X > h, Y > k) for finite h, k and |r| < 1 (Genz's BVNU scheme)."""
    out = np.empty_like(h)
    hk = h * k

    low = np.abs(r) < 0.925
    if np.any(low):
        hl, kl, rl, hkl = h[low], k[low], r[low], hk[low]
        hs = 0.5 * (hl * hl + kl * kl)
        asr = 0.5 * np.arcsin(rl)
        x = np.concatenate([1.0 - _GL_X, 1.0 + _GL_X])
        w = np.concatenate([_GL_W, _GL_W])
        sn = np.sin(asr[:, None] * x[None, :])
        terms = np.exp((sn * hkl[:, None] - hs[:, None]) / (1.0 - sn * sn))
        bvn = terms @ w
        out[low] = bvn * asr / _TWOPI + ndtr(-hl) * ndtr(-kl)

    high = ~low
    if np.any(high):
        hh, kk, rr = h[high], k[high].copy(), r[high]
        hkh = hk[high].copy()
        neg = rr < 0
        kk[neg] = -kk[neg]
        hkh[neg] = -hkh[neg]
        a_s = 1.0 - rr * rr
        a = np.sqrt(a_s)
        bs = (hh - kk) ** 2
        c = (4.0 - hkh) / 8.0
        d16 = (12.0 - hkh) / 16.0
        d = d16 / 5.0
        asr = -(bs / a_s + hkh) / 2.0
        bvn = np.where(asr > -100.0,
                       a * np.exp(np.maximum(asr, -100.0))
                       * (1.0 - c * (bs - a_s) * (1.0 - d * bs) / 3.0 + c * d * a_s * a_s),
                       0.0)
        b = np.sqrt(bs)
        sp = np.sqrt(_TWOPI) * ndtr(-b / a)
        bvn = np.where(hkh > -100.0,
                       bvn - np.exp(-np.minimum(hkh, 100.0) / 2.0) * sp * b
                       * (1.0 - c * bs * (1.0 - d * bs) / 3.0),
                       bvn)
        a = a / 2.0
        for xi, wi in zip(_GL_X, _GL_W):
            for sgn in (-1.0, 1.0):
                xs = (a * (sgn * xi + 1.0)) ** 2
                rs = np.sqrt(1.0 - xs)
                asr = -(bs / xs + hkh) / 2.0
                ok = asr > -100.0
                sp = 1.0 + c * xs * (1.0 + d16 * xs)
                ep = np.exp(-hkh * xs / (2.0 * (1.0 + rs) ** 2)) / rs
                bvn = bvn + np.where(ok, a * wi * np.exp(np.maximum(asr, -100.0)) * (ep - sp), 0.0)
        bvn = -bvn / _TWOPI

        res = np.empty_like(bvn)
        pos = ~neg
        res[pos] = bvn[pos] + ndtr(-np.maximum(hh[pos], kk[pos]))
        hn, kn, bn = hh[neg], kk[neg], bvn[neg]
        ge = hn >= kn
        lower = np.where(hn < 0, ndtr(kn) - ndtr(hn), ndtr(-hn) - ndtr(-kn))
        res[neg] = np.where(ge, -bn, lower - bn)
        out[high] = res
    return np.clip(out, 0.0, 1.0)


def bvn_cdf(a, b, rho):
    """Bivariate standard normal cdf P(X <= a, Y <= b) with correlation ``rho``.

    Arguments broadcast against each other and may be infinite.
    """
    a, b, rho = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float),
                                    np.asarray(rho, float))
    scalar = a.ndim == 0
    a, b, rho = np.atleast_1d(a).ravel(), np.atleast_1d(b).ravel(), np.atleast_1d(rho).ravel()
    shape = np.broadcast(*np.broadcast_arrays(a, b)).shape
    if np.any(np.abs(rho) >= 1.0) or np.any(np.isnan(rho)):
        raise ValueError("bvn_cdf requires |rho| < 1")

    out = np.zeros(shape)
    a_lo, b_lo = np.isneginf(a), np.isneginf(b)
    a_hi, b_hi = np.isposinf(a), np.isposinf(b)
    zero = a_lo | b_lo
    both = a_hi & b_hi & ~zero
    only_a = a_hi & ~b_hi & ~zero
    only_b = b_hi & ~a_hi & ~zero
    out[both] = 1.0
    out[only_a] = ndtr(b[only_a])
    out[only_b] = ndtr(a[only_b])
    fin = ~(zero | a_hi | b_hi)
    if np.any(fin):
        out[fin] = _bvnu_finite(-a[fin], -b[fin], rho[fin])
    return float(out[0]) if scalar else out


class BlockDiagonal:
    """Symmetric positive-definite block-diagonal matrix stored by blocks.

    Each block is factored on construction; a failed factorization raises
    :class:`InfeasibleError`.
    """

    def __init__(self, blocks):
        self.blocks = [np.asarray(b, dtype=float) for b in blocks]
        self.factors = []
        for blk in self.blocks:
            try:
                self.factors.append(linalg.cholesky(blk, lower=True))
            except linalg.LinAlgError as exc:
                raise InfeasibleError("block is not positive definite") from exc
        self.sizes = [len(b) for b in self.blocks]

    @property
    def shape(self):
        n = sum(self.sizes)
        return (n, n)

    def logdet(self):
        return float(sum(2.0 * np.log(np.diag(L)).sum() for L in self.factors))

    def quadform(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.shape[0],):
            raise ValueError("vector length does not match matrix size")
        total, start = 0.0, 0
        for L, m in zip(self.factors, self.sizes):
            w = linalg.solve_triangular(L, z[start:start + m], lower=True)
            total += float(w @ w)
            start += m
        return total

    def todense(self):
        return linalg.block_diag(*self.blocks)


def logdet_and_quadform(omega, z):
    """Return ``(log|omega|, z' omega^{-1} z)`` for a :class:`BlockDiagonal`."""
    if not isinstance(omega, BlockDiagonal):
        omega = BlockDiagonal(omega)
    return omega.logdet(), omega.quadform(z)


def batched_logdet_quadform(block, Z):
    """Log-determinant of one shared block and per-row quadratic forms.

    ``Z`` holds one row per unit sharing ``block``. Returns ``(logdet, q)``
    with ``q[i] = Z[i] @ inv(block) @ Z[i]``.
    """
    try:
        L = linalg.cholesky(block, lower=True)
    except linalg.LinAlgError as exc:
        raise InfeasibleError("block is not positive definite") from exc
    W = linalg.solve_triangular(L, Z.T, lower=True)
    return 2.0 * np.log(np.diag(L)).sum(), np.einsum("ij,ij->j", W, W)
