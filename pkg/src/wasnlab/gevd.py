"""Generalized eigenvalue decomposition and rank-1 speech-distortion-weighted filters.

For each frequency bin the pencil (R_yy, R_nn) is jointly diagonalised,

    R_yy = Q diag(sigma_y) Q^H,    R_nn = Q diag(sigma_n) Q^H,

with columns ordered by descending sigma_y / sigma_n. The solver normalises
the generalized eigenvectors against R_nn, so sigma_n comes out as all ones
and sigma_y as the generalized eigenvalues; the dominant speech power is then
``sigma_y_1 - sigma_n_1`` and a rank-1 speech model is ``sigma_s1 q_1 q_1^H``.
Enhancement weights solve

    (R_s + mu R_nn) w = R_s e_ref

with R_s either the rank-1 model or a full-rank estimate (baseline ablation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConditioningError, SizeError, ValidationError


@dataclass
class GevdDecomposition:
    """Joint diagonalisation of a covariance pencil, batched over bins.

    ``x`` holds the generalized eigenvectors (columns, ``x^H R_nn x = I``);
    ``q = x^{-H}`` is the basis that reconstructs both matrices. All arrays
    carry a leading bins axis; a single pencil is stored with bins == 1 and
    unwrapped by :func:`gevd`.
    """

    sigma_y: np.ndarray  # (bins, C), descending
    sigma_n: np.ndarray  # (bins, C), all ones in this normalisation
    q: np.ndarray  # (bins, C, C)
    x: np.ndarray  # (bins, C, C)

    @property
    def sigma_s(self) -> np.ndarray:
        """Speech eigenvalue estimates, clamped at zero."""
        return np.maximum(self.sigma_y - self.sigma_n, 0.0)

    @property
    def t1(self) -> np.ndarray:
        """Reference projector ``x_1 q_1(ref)^*`` per bin (diagnostic)."""
        return self.x[..., :, 0] * np.conj(self.q[..., 0:1, 0])


def _as_pencil(r_yy: np.ndarray, r_nn: np.ndarray):
    r_yy = np.asarray(r_yy, dtype=np.complex128)
    r_nn = np.asarray(r_nn, dtype=np.complex128)
    single = r_yy.ndim == 2
    if single:
        r_yy = r_yy[None]
        r_nn = r_nn[None]
    if r_yy.shape != r_nn.shape or r_yy.ndim != 3 or r_yy.shape[1] != r_yy.shape[2]:
        raise SizeError(f"incompatible pencil shapes {r_yy.shape} / {r_nn.shape}")
    return r_yy, r_nn, single


def _maybe_unbatch(dec: GevdDecomposition, single: bool) -> GevdDecomposition:
    if not single:
        return dec
    return GevdDecomposition(sigma_y=dec.sigma_y[0], sigma_n=dec.sigma_n[0],
                             q=dec.q[0], x=dec.x[0])


def gevd(r_yy: np.ndarray, r_nn: np.ndarray) -> GevdDecomposition:
    """Per-bin generalized eigendecomposition of Hermitian pencils.

    Accepts a single (C, C) pencil or a stacked (bins, C, C) batch. ``r_nn``
    must be positive definite; factorization failures surface as
    :class:`ConditioningError`.
    """
    r_yy, r_nn, single = _as_pencil(r_yy, r_nn)
    n_bins, n_ch, _ = r_yy.shape
    sigma_y = np.empty((n_bins, n_ch))
    x = np.empty((n_bins, n_ch, n_ch), dtype=np.complex128)
    q = np.empty_like(x)
    for f in range(n_bins):
        try:
            lam, vec = scipy.linalg.eigh(r_yy[f], r_nn[f])
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise ConditioningError(f"generalized eigensolve failed at bin {f}: {exc}") from exc
        order = np.argsort(lam)[::-1]
        lam = lam[order]
        vec = vec[:, order]
        qf = np.linalg.inv(vec).conj().T
        # pin the column phase: reference entry of each q_i made real positive
        for i in range(n_ch):
            ref = qf[0, i]
            if abs(ref) < 1e-300:
                ref = qf[np.argmax(np.abs(qf[:, i])), i]
            if ref != 0:
                rot = np.conj(ref) / abs(ref)
                qf[:, i] *= rot
                vec[:, i] *= rot
        sigma_y[f] = lam
        x[f] = vec
        q[f] = qf
    dec = GevdDecomposition(sigma_y=sigma_y, sigma_n=np.ones_like(sigma_y), q=q, x=x)
    return _maybe_unbatch(dec, single)


def rank1_speech(dec: GevdDecomposition) -> np.ndarray:
    """Rank-1 speech covariance ``max(sigma_y1 - sigma_n1, 0) q_1 q_1^H`` per bin.

    Bins where the mixture does not rise above the noise floor get an
    all-zero model.
    """
    q = dec.q
    single = q.ndim == 2
    sigma = np.atleast_2d(dec.sigma_s)[:, 0]
    q1 = q[None, :, 0] if single else q[:, :, 0]
    model = sigma[:, None, None] * (q1[:, :, None] * q1[:, None, :].conj())
    return model[0] if single else model


def _solve_weights(r_s: np.ndarray, r_nn: np.ndarray, mu: float, ref_channel: int) -> np.ndarray:
    if mu < 0:
        raise ValidationError(f"mu must be non-negative, got {mu}")
    r_s, r_nn, single = _as_pencil(r_s, r_nn)
    if not 0 <= ref_channel < r_s.shape[1]:
        raise ValidationError(f"ref_channel {ref_channel} out of range for C={r_s.shape[1]}")
    lhs = r_s + mu * r_nn
    rhs = r_s[:, :, ref_channel]
    try:
        w = np.linalg.solve(lhs, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as exc:
        raise ConditioningError(f"filter solve failed: {exc}") from exc
    return w[0] if single else w


def sdw_mwf_weights(r_sr1: np.ndarray, r_nn: np.ndarray, mu: float = 1.0,
                    ref_channel: int = 0) -> np.ndarray:
    """Speech-distortion-weighted MWF on the rank-1 speech model.

    Solves ``(r_sr1 + mu r_nn) w = r_sr1 e_ref`` per bin; no explicit inverse.
    """
    return _solve_weights(r_sr1, r_nn, mu, ref_channel)


def baseline_mwf_weights(r_ss_est: np.ndarray, r_nn: np.ndarray, mu: float = 1.0,
                         ref_channel: int = 0) -> np.ndarray:
    """Full-rank SDW-MWF ablation: same solve with the raw speech estimate."""
    return _solve_weights(r_ss_est, r_nn, mu, ref_channel)


def gevd_mwf_weights(r_yy: np.ndarray, r_nn: np.ndarray, mu: float = 1.0,
                     ref_channel: int = 0) -> np.ndarray:
    """Convenience route: GEVD, rank-1 speech model, then SDW-MWF weights."""
    dec = gevd(r_yy, r_nn)
    return sdw_mwf_weights(rank1_speech(dec), r_nn, mu=mu, ref_channel=ref_channel)


def apply_weights(weights: np.ndarray, spectra: np.ndarray) -> np.ndarray:
    """Beamform: ``out[f, t] = w[f]^H y[:, f, t]``."""
    weights = np.asarray(weights, dtype=np.complex128)
    spectra = np.asarray(spectra, dtype=np.complex128)
    if weights.ndim != 2 or spectra.ndim != 3 or weights.shape != (spectra.shape[1], spectra.shape[0]):
        raise SizeError(f"weights {weights.shape} do not match spectra {spectra.shape}")
    return np.einsum("fc,cft->ft", weights.conj(), spectra)
