"""Choi-form reconstruction from coherent-probe records.

For a probe ``alpha`` the output linear coefficient is affine in
``(alpha*, alpha)``::

    d = gamma_b + X_ab^T alpha* + Y_ab^T alpha

and the output constant is quadratic::

    c = c0 + 2 Re(gamma_a . alpha*) + Re(alpha*^T X_aa alpha*) + alpha^T Y_aa alpha*

Stacking probes gives the linear systems ``K u = d`` and ``J w = c``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import List, Optional, Sequence

import numpy as np

from .channels import ProbeRecord
from .errors import ConjugateMismatch, DimensionMismatch, IllConditioned, QuadraticInconsistency, WrongProbeSet
from .qform import (
    COND_WARN,
    GaussianQForm,
    encode_complex,
    form_to_dict,
    log_gaussian_integral,
    normalized_det,
    solve_linear,
)

log = logging.getLogger(__name__)

DEFAULT_PROBES = (0, 1, 1j, -1, -1j, 1 + 1j)
DET_RTOL = 1e-8
QUADRATIC_TOL = 1e-6
CONJUGATE_TOL = 1e-6


def k_size(k: int) -> int:
    """Probes needed for the linear-term system: ``2k + 1``."""
    return 2 * k + 1


def j_size(k: int) -> int:
    """Probes needed for the constant-term system: ``(k + 1)(2k + 1)``."""
    return (k + 1) * (2 * k + 1)


def _as_probe_array(alphas) -> np.ndarray:
    rows = [np.atleast_1d(np.asarray(a, dtype=complex)) for a in alphas]
    if not rows:
        raise DimensionMismatch("no probes given")
    k = rows[0].size
    if any(r.size != k for r in rows):
        raise DimensionMismatch("all probes must have the same number of modes")
    return np.array(rows)


@dataclass(frozen=True, eq=False)
class ProbeSet:
    k: int
    alphas: np.ndarray
    trace_preserving: bool = False
    label: str = ""

    def __post_init__(self):
        A = _as_probe_array(self.alphas)
        if A.shape[1] != self.k:
            raise DimensionMismatch(f"probes have {A.shape[1]} modes, expected {self.k}")
        need = k_size(self.k) if self.trace_preserving else j_size(self.k)
        if A.shape[0] < need:
            raise ValueError(f"{A.shape[0]} probes given, at least {need} required")
        for i, j in combinations_with_replacement(range(A.shape[0]), 2):
            if i != j and np.allclose(A[i], A[j], rtol=0, atol=1e-12):
                raise ValueError(f"probes {i} and {j} coincide")
        object.__setattr__(self, "alphas", A)


def default_probes(k: int = 1, seed: int = 7) -> np.ndarray:
    """Default probe amplitudes: the fixed six-probe set for one mode.

    For ``k > 1`` a seeded draw of ``(k+1)(2k+1)`` complex amplitudes.
    """
    if k == 1:
        return np.array(DEFAULT_PROBES, dtype=complex).reshape(-1, 1)
    rng = np.random.default_rng(seed)
    n = j_size(k)
    return (rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))) / np.sqrt(2)


def build_K(alphas) -> np.ndarray:
    """Rows ``[1, alpha*, alpha]``; shape ``(n_probes, 2k + 1)``."""
    A = _as_probe_array(alphas)
    return np.hstack([np.ones((A.shape[0], 1)), A.conj(), A])


def _pairs(k: int):
    return [(m, n) for m in range(k) for n in range(m, k)]


def build_J(alphas) -> np.ndarray:
    """Rows ``[1, alpha*, alpha, 1/2 alpha*_m alpha*_n, 1/2 alpha_m alpha_n, alpha_m alpha*_n]``.

    Symmetric products run over ``m <= n``; the mixed products over all
    ``(m, n)`` with ``m`` major.  Column count is ``(k + 1)(2k + 1)``.
    """
    A = _as_probe_array(alphas)
    k = A.shape[1]
    pairs = _pairs(k)
    sym_conj = np.stack([0.5 * A[:, m].conj() * A[:, n].conj() for m, n in pairs], axis=1)
    sym = np.stack([0.5 * A[:, m] * A[:, n] for m, n in pairs], axis=1)
    mixed = np.stack([A[:, m] * A[:, n].conj() for m in range(k) for n in range(k)], axis=1)
    return np.hstack([np.ones((A.shape[0], 1)), A.conj(), A, sym_conj, sym, mixed])


@dataclass(frozen=True, eq=False)
class ChoiReconstruction:
    choi: GaussianQForm
    residual_K: float
    residual_J: float
    cond_K: float
    cond_J: float
    quadratic_consistency: float
    tp_assumed: bool = False
    conjugate_mismatch: float = 0.0
    method: str = "solve"
    a_side: str = "measured"
    warnings: List[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.choi.n_modes // 2

    def blocks(self) -> dict:
        return self.choi.blocks()

    def to_dict(self) -> dict:
        return {
            "choi": form_to_dict(self.choi),
            "blocks": {
                name: (value if name == "c0" else encode_complex(value)) for name, value in self.blocks().items()
            },
            "residual_K": self.residual_K,
            "residual_J": self.residual_J,
            "cond_K": self.cond_K,
            "cond_J": self.cond_J,
            "quadratic_consistency": self.quadratic_consistency,
            "conjugate_mismatch": self.conjugate_mismatch,
            "tp_assumed": self.tp_assumed,
            "a_side": self.a_side,
            "method": self.method,
            "warnings": list(self.warnings),
        }


def _shared_quadratic(records: Sequence[ProbeRecord]):
    Xs = np.array([r.Xbb for r in records])
    Ys = np.array([r.Ybb for r in records])
    Xbb, Ybb = Xs.mean(axis=0), Ys.mean(axis=0)
    deviation = float(max(np.max(np.abs(Xs - Xbb)), np.max(np.abs(Ys - Ybb))))
    if deviation > QUADRATIC_TOL:
        raise QuadraticInconsistency(f"output quadratic blocks differ across probes by {deviation:.3g}")
    return 0.5 * (Xbb + Xbb.T), 0.5 * (Ybb + Ybb.conj().T), deviation


def _checked_solve(M: np.ndarray, rhs: np.ndarray, name: str):
    sol = solve_linear(M, rhs)
    ndet = normalized_det(M)
    if sol.cond > COND_WARN or ndet < DET_RTOL:
        raise IllConditioned(f"{name} is ill conditioned: cond={sol.cond:.3g}, normalized det={ndet:.3g}")
    return sol


def solve_linear_terms(alphas: np.ndarray, D: np.ndarray):
    """Solve ``K (gamma_b; X_ab; Y_ab) = D`` with one column per output mode."""
    k = alphas.shape[1]
    sol = _checked_solve(build_K(alphas), D, "K")
    U = sol.solution
    return U[0], U[1 : k + 1], U[k + 1 :], sol


def solve_constant_terms(alphas: np.ndarray, c: np.ndarray):
    """Solve ``J w = c`` and unpack ``(c0, gamma_a, X_aa, Y_aa)`` with conjugate checks."""
    k = alphas.shape[1]
    sol = _checked_solve(build_J(alphas), c.astype(complex), "J")
    w = sol.solution
    pairs = _pairs(k)
    p = len(pairs)
    c0 = w[0]
    g, g_conj = w[1 : k + 1], w[k + 1 : 2 * k + 1]
    xs, xs_conj = w[2 * k + 1 : 2 * k + 1 + p], w[2 * k + 1 + p : 2 * k + 1 + 2 * p]
    Y = w[2 * k + 1 + 2 * p :].reshape(k, k)

    def sym_matrix(values):
        M = np.zeros((k, k), complex)
        for (m, n), v in zip(pairs, values):
            M[m, n] = M[n, m] = v if m == n else v / 2
        return M

    X, X_conj = sym_matrix(xs), sym_matrix(xs_conj)
    scale = max(1.0, float(np.max(np.abs(w))))
    mismatch = max(
        abs(c0.imag),
        float(np.max(np.abs(g_conj - g.conj()))),
        float(np.max(np.abs(X_conj - X.conj()))),
        float(np.max(np.abs(Y - Y.conj().T))),
    )
    if mismatch > CONJUGATE_TOL * scale:
        raise ConjugateMismatch(f"conjugate-pair unknowns disagree by {mismatch:.3g}")
    gamma_a = 0.5 * (g + g_conj.conj())
    X_aa = 0.5 * (X + X_conj.conj())
    Y_aa = 0.5 * (Y + Y.conj().T)
    return float(c0.real), gamma_a, X_aa, Y_aa, sol, mismatch


def _check_records(records: Sequence[ProbeRecord]) -> int:
    if not records:
        raise DimensionMismatch("no probe records")
    k = records[0].k
    if any(r.k != k for r in records):
        raise DimensionMismatch("probe records mix different mode counts")
    return k


def normalization_constants(alphas, gamma_b, X_ab, Y_ab, Xbb, Ybb) -> np.ndarray:
    """Output constants ``c(alpha)`` that make each predicted output state trace one."""
    k = Xbb.shape[0]
    out = []
    for alpha in np.atleast_2d(alphas):
        d = gamma_b + X_ab.T @ alpha.conj() + Y_ab.T @ alpha
        out.append(-log_gaussian_integral(GaussianQForm(k, 0.0, d, Xbb, Ybb)))
    return np.array(out)


def reconstruct(records: Sequence[ProbeRecord], trace_preserving: bool = False) -> ChoiReconstruction:
    """Recover the Choi Q-form from probe records.

    More records than the minimum give an ordinary least-squares solution.
    With ``trace_preserving=True`` only the linear terms are read from the
    data (``2k + 1`` probes suffice); the output constants are then fixed by
    normalizing every predicted output, which in turn determines
    ``(c0, gamma_a, X_aa, Y_aa)``.

    Raises:
        IllConditioned: degenerate probe set (``cond > 1e8`` or vanishing
            normalized determinant).
        QuadraticInconsistency: records disagree on ``Xbb``/``Ybb`` by more
            than ``1e-6``.
        ConjugateMismatch: the constant-term solve breaks conjugate symmetry.
    """
    k = _check_records(records)
    need = k_size(k) if trace_preserving else j_size(k)
    if len(records) < need:
        raise ValueError(f"{len(records)} records given, at least {need} required")
    alphas = np.array([r.alpha for r in records])
    Xbb, Ybb, deviation = _shared_quadratic(records)
    D = np.array([r.d for r in records])
    gamma_b, X_ab, Y_ab, sol_K = solve_linear_terms(alphas, D)

    if trace_preserving:
        virtual = default_probes(k)
        c = normalization_constants(virtual, gamma_b, X_ab, Y_ab, Xbb, Ybb)
        c0, gamma_a, X_aa, Y_aa, sol_J, mismatch = solve_constant_terms(virtual, c)
        a_side = "normalization"
    else:
        c = np.array([r.c for r in records])
        c0, gamma_a, X_aa, Y_aa, sol_J, mismatch = solve_constant_terms(alphas, c)
        a_side = "measured"

    choi = GaussianQForm.from_blocks(
        c0=c0, gamma_a=gamma_a, gamma_b=gamma_b, X_aa=X_aa, X_ab=X_ab, X_bb=Xbb, Y_aa=Y_aa, Y_ab=Y_ab, Y_bb=Ybb
    )
    warnings = []
    if sol_K.ill_conditioned or sol_J.ill_conditioned:
        warnings.append("ill-conditioned")
    log.debug("reconstructed k=%d from %d records (tp=%s)", k, len(records), trace_preserving)
    return ChoiReconstruction(
        choi,
        sol_K.residual,
        sol_J.residual,
        sol_K.cond,
        sol_J.cond,
        deviation,
        trace_preserving,
        mismatch,
        "solve",
        a_side,
        warnings,
    )


def closed_form_default(records: Sequence[ProbeRecord]) -> ChoiReconstruction:
    """Explicit inversion for the single-mode default probes ``0, 1, i, -1, -i, 1+i``.

    Records must come in exactly that order.
    """
    if len(records) != 6 or _check_records(records) != 1:
        raise WrongProbeSet("closed form needs the six single-mode default probes")
    alphas = np.array([r.alpha[0] for r in records])
    if np.max(np.abs(alphas - np.array(DEFAULT_PROBES))) > 1e-12:
        raise WrongProbeSet(f"probe amplitudes {alphas} differ from the default set")
    Xbb, Ybb, deviation = _shared_quadratic(records)
    d1, d2, d3 = (r.d[0] for r in records[:3])
    c1, c2, c3, c4, c5, c6 = (r.c for r in records)
    gamma_b = d1
    X_ab = (-(1 + 1j) * d1 + d2 + 1j * d3) / 2
    Y_ab = (-(1 - 1j) * d1 + d2 - 1j * d3) / 2
    gamma_a = (c2 + 1j * c3 - c4 - 1j * c5) / 4
    X_aa = (2j * c1 + (1 - 2j) * c2 - (1 + 2j) * c3 + c4 - c5 + 2j * c6) / 4
    Y_aa = -c1 + (c2 + c3 + c4 + c5) / 4
    choi = GaussianQForm.from_blocks(
        c0=c1, gamma_a=gamma_a, gamma_b=gamma_b, X_aa=X_aa, X_ab=X_ab, X_bb=Xbb, Y_aa=Y_aa, Y_ab=Y_ab, Y_bb=Ybb
    )
    K, J = build_K(alphas), build_J(alphas)
    u = np.array([gamma_b, X_ab, Y_ab])
    w = np.array([c1, gamma_a, np.conj(gamma_a), X_aa, np.conj(X_aa), Y_aa])
    D = np.array([r.d[0] for r in records])
    c = np.array([r.c for r in records])
    return ChoiReconstruction(
        choi,
        float(np.linalg.norm(K @ u - D)),
        float(np.linalg.norm(J @ w - c)),
        float(np.linalg.cond(K)),
        float(np.linalg.cond(J)),
        deviation,
        method="closed-form",
    )


def probe_design(candidates: Sequence[ProbeSet]) -> List[dict]:
    """Rank probe sets by conditioning; degenerate sets are reported, not rejected."""
    rows = []
    for index, ps in enumerate(candidates):
        K = build_K(ps.alphas)
        det_K, cond_K = normalized_det(K), float(np.linalg.cond(K))
        det_J: Optional[float] = None
        cond_J: Optional[float] = None
        admissible = det_K > DET_RTOL
        if not ps.trace_preserving:
            J = build_J(ps.alphas)
            det_J, cond_J = normalized_det(J), float(np.linalg.cond(J))
            admissible = admissible and det_J > DET_RTOL
        rows.append(
            {
                "index": index,
                "label": ps.label,
                "k": ps.k,
                "n_probes": int(ps.alphas.shape[0]),
                "k_columns": K.shape[1],
                "j_columns": None if ps.trace_preserving else j_size(ps.k),
                "det_K": det_K,
                "det_J": det_J,
                "cond_K": cond_K,
                "cond_J": cond_J,
                "admissible": bool(admissible),
            }
        )

    def key(row):
        worst = max(row["cond_K"], row["cond_J"] if row["cond_J"] is not None else 0.0)
        return (not np.isfinite(worst), worst, row["index"])

    rows.sort(key=key)
    for rank, row in enumerate(rows, 1):
        row["rank"] = rank
    return rows


def add_noise(records: Sequence[ProbeRecord], sigma: float, seed: int) -> List[ProbeRecord]:
    """Independent Gaussian noise of std ``sigma`` on Re/Im of every ``d`` entry and on ``c``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = np.random.default_rng(seed)
    out = []
    for r in records:
        dn = r.d + sigma * (rng.normal(size=r.k) + 1j * rng.normal(size=r.k))
        cn = r.c + sigma * rng.normal()
        out.append(ProbeRecord(r.alpha, dn, cn, r.Xbb, r.Ybb))
    return out
