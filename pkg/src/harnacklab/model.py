"""Model declarations: finite-dimensional OU dynamics with optional jumps.

An `OuLevyModel` is the data of the linear SDE
``dX_t = (A X_t + a) dt + noise``, where the noise has Gaussian covariance
rate ``R`` and, optionally, an independent compound-Poisson jump part.
This module also hosts the decay-certificate check used by the sharpest
inequalities, sufficient conditions for existence of an invariant law, and
the adjoint (time-reversed) model built from the steady-state covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate

from . import linops


@dataclass(frozen=True, eq=False)
class CompoundPoissonSpec:
    """Finite-activity jump part: rate and jump-size law.

    The law is either a finite atom list (``atoms`` with ``probs``) or an
    opaque ``sampler(generator, size) -> (size, d) array``.  ``exp_moment``
    maps a vector ``c`` to ``E exp(<c, xi>)`` and is required for closed-form
    checks; it is filled in automatically for atom laws.
    """

    rate: float
    atoms: np.ndarray | None = None
    probs: np.ndarray | None = None
    sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None
    exp_moment: Callable[[np.ndarray], float] | None = None

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"jump rate must be positive, got {self.rate}")
        if (self.atoms is None) == (self.sampler is None):
            raise ValueError("exactly one of atoms or sampler must be given")
        if self.atoms is not None:
            atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
            if not np.isfinite(atoms).all():
                raise ValueError("jump atoms must be finite vectors")
            if self.probs is None:
                probs = np.full(atoms.shape[0], 1.0 / atoms.shape[0])
            else:
                probs = np.asarray(self.probs, dtype=float).reshape(-1)
            if probs.shape[0] != atoms.shape[0]:
                raise ValueError("atoms and probs length mismatch")
            if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-12:
                raise ValueError("atom probabilities must be nonnegative and sum to 1")
            object.__setattr__(self, "atoms", atoms)
            object.__setattr__(self, "probs", probs)
            if self.exp_moment is None:
                object.__setattr__(self, "exp_moment", self._atom_exp_moment)

    def _atom_exp_moment(self, c) -> float:
        c = np.asarray(c, dtype=float)
        return float(self.probs @ np.exp(self.atoms @ c))

    @property
    def dim(self) -> int:
        if self.atoms is not None:
            return self.atoms.shape[1]
        return -1  # sampler laws carry no static dimension


@dataclass(frozen=True, eq=False)
class OuLevyModel:
    """Finite-dimensional OU model: drift matrix, noise covariance, drift
    offset, optional compound-Poisson jump part."""

    drift_matrix: np.ndarray
    noise_cov: np.ndarray
    drift_offset: np.ndarray | None = None
    jump: CompoundPoissonSpec | None = None

    def __post_init__(self):
        a = linops.as_square_matrix(self.drift_matrix, "drift matrix")
        r = linops.check_symmetric(self.noise_cov, "noise covariance")
        d = a.shape[0]
        if r.shape[0] != d:
            raise ValueError("drift and covariance dimensions differ")
        wmin = float(np.linalg.eigvalsh(r).min())
        if wmin < -linops.DEFAULT_RANK_TOL * max(1.0, float(np.abs(r).max())):
            raise linops.NotPsdError(f"noise covariance has eigenvalue {wmin:.3e} < 0")
        offset = np.zeros(d) if self.drift_offset is None else np.asarray(self.drift_offset, dtype=float).reshape(-1)
        if offset.shape[0] != d:
            raise ValueError("drift offset dimension mismatch")
        if self.jump is not None and self.jump.atoms is not None and self.jump.atoms.shape[1] != d:
            raise ValueError("jump atom dimension mismatch")
        object.__setattr__(self, "drift_matrix", a)
        object.__setattr__(self, "noise_cov", r)
        object.__setattr__(self, "drift_offset", offset)

    @property
    def dim(self) -> int:
        return self.drift_matrix.shape[0]

    @property
    def has_jumps(self) -> bool:
        return self.jump is not None

    def snapshot(self, t: float) -> linops.SemigroupSnapshot:
        return linops.semigroup_snapshot(self.drift_matrix, self.noise_cov, self.drift_offset, t)

    def propagator(self, t: float) -> np.ndarray:
        return linops.matrix_exponential(self.drift_matrix, t)

    def noise_sqrt(self, rank_tol: float = linops.DEFAULT_RANK_TOL) -> linops.PsdFactorization:
        return linops.psd_sqrt_pinv(self.noise_cov, rank_tol)

    def is_stable(self) -> bool:
        return linops.spectral_abscissa(self.drift_matrix) < 0


@dataclass(frozen=True)
class HFunction:
    """Positive time profile ``h`` with optional closed-form integrals.

    ``inv_integral(t)`` is ``int_0^t ds / h(s)`` and ``integral(t)`` is
    ``int_0^t h(s) ds``; adaptive quadrature fills in whichever closed form
    is missing.
    """

    fn: Callable[[float], float]
    inv_integral: Callable[[float], float] | None = None
    integral: Callable[[float], float] | None = None
    label: str = "h"

    @staticmethod
    def exponential(rate: float) -> "HFunction":
        """``h(t) = exp(-rate*t)`` with both integrals in closed form."""
        if rate == 0.0:
            return HFunction.constant(1.0)
        return HFunction(
            fn=lambda t: float(np.exp(-rate * t)),
            inv_integral=lambda t: float(np.expm1(rate * t) / rate),
            integral=lambda t: float(-np.expm1(-rate * t) / rate),
            label=f"exp(-{rate:g} t)",
        )

    @staticmethod
    def constant(value: float) -> "HFunction":
        if value <= 0:
            raise ValueError("constant profile must be positive")
        return HFunction(
            fn=lambda t: float(value),
            inv_integral=lambda t: t / value,
            integral=lambda t: value * t,
            label=f"{value:g}",
        )

    def __call__(self, t: float) -> float:
        return float(self.fn(t))

    def integral_of_inverse(self, t: float) -> float:
        if self.inv_integral is not None:
            return float(self.inv_integral(t))
        val, _ = scipy.integrate.quad(lambda s: 1.0 / self.fn(s), 0.0, t, epsabs=1e-12, epsrel=1e-12, limit=200)
        return float(val)

    def integral_of_h(self, t: float) -> float:
        if self.integral is not None:
            return float(self.integral(t))
        val, _ = scipy.integrate.quad(self.fn, 0.0, t, epsabs=1e-12, epsrel=1e-12, limit=200)
        return float(val)


@dataclass(frozen=True)
class HConditionReport:
    """Outcome of sampling the decay certificate over a (time, probe) grid."""

    certified: bool
    worst_ratio: float
    n_checked: int
    failures: tuple = ()

    def __bool__(self) -> bool:
        return self.certified


H_CONDITION_SLACK = 1e-9


def verify_h_condition(model: OuLevyModel, h: HFunction, times, probes) -> HConditionReport:
    """Sample-check ``|R^{-1/2} T_t R x| <= sqrt(h(t)) |R^{1/2} x|``.

    The check is sampled on the given grid, not proven; an infinite ratio is
    reported whenever ``T_t R x`` leaves the range of ``R^{1/2}``.
    """
    rfac = model.noise_sqrt()
    r = model.noise_cov
    worst = 0.0
    failures = []
    n = 0
    for t in times:
        prop = model.propagator(float(t))
        hv = h(float(t))
        if not hv > 0:
            raise ValueError(f"decay profile must be positive, got h({t}) = {hv}")
        root_h = float(np.sqrt(hv))
        for i, x in enumerate(probes):
            x = np.asarray(x, dtype=float).reshape(-1)
            if not np.linalg.norm(x) > 0:
                raise ValueError("probes must be nonzero vectors")
            n += 1
            v = prop @ (r @ x)
            rhs = root_h * float(np.linalg.norm(rfac.apply_sqrt(x)))
            if not rfac.in_range(v):
                failures.append((float(t), i, float("inf"), rhs))
                worst = float("inf")
                continue
            lhs = float(np.linalg.norm(rfac.apply_pinv_sqrt(v)))
            if lhs <= H_CONDITION_SLACK and rhs <= H_CONDITION_SLACK:
                ratio = 0.0
            elif rhs == 0.0:
                ratio = float("inf")
            else:
                ratio = lhs / rhs
            worst = max(worst, ratio)
            if lhs > rhs + H_CONDITION_SLACK:
                failures.append((float(t), i, lhs, rhs))
    return HConditionReport(certified=not failures, worst_ratio=worst, n_checked=n, failures=tuple(failures))


def default_h_probes(dim: int) -> list[np.ndarray]:
    """Deterministic probe set: coordinate axes plus two mixed directions."""
    probes = [np.eye(dim)[i] for i in range(dim)]
    probes.append(np.ones(dim) / np.sqrt(dim))
    if dim > 1:
        alt = np.array([(-1.0) ** i for i in range(dim)]) / np.sqrt(dim)
        probes.append(alt)
    return probes


@dataclass(frozen=True)
class SemilinearSpec:
    """State-dependent drift perturbation with quadratic growth constants.

    ``drift_fn`` maps row-stacked states ``(m, d)`` to row-stacked drift
    values; its range must stay inside the range of ``R^{1/2}`` and satisfy
    ``|R^{-1/2} F(x)|^2 <= k1 + k2 |x|^2``.  Both conditions are spot-checked
    on probe states, not proven.
    """

    drift_fn: Callable[[np.ndarray], np.ndarray]
    k1: float
    k2: float
    label: str = "F"

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0:
            raise ValueError("growth constants must be nonnegative")

    def validate(self, model: OuLevyModel, probes, slack: float = 1e-9) -> None:
        rfac = model.noise_sqrt()
        for x in probes:
            x = np.asarray(x, dtype=float).reshape(-1)
            fv = np.asarray(self.drift_fn(x[None, :]), dtype=float).reshape(-1)
            if not rfac.in_range(fv, tol=1e-8):
                raise ValueError(f"{self.label}(x) leaves the range of R^(1/2) at probe {x}")
            val = float(np.sum(rfac.apply_pinv_sqrt(fv) ** 2))
            bound = self.k1 + self.k2 * float(np.sum(x**2))
            if val > bound + slack:
                raise ValueError(
                    f"growth condition fails at probe {x}: {val:.6g} > {bound:.6g}"
                )


@dataclass(frozen=True)
class AssumptionAReport:
    """Sufficient-condition report for existence of an invariant law.

    Checks (i) Hurwitz drift, (ii) a finite-activity jump part with finite
    second moment, (iii) trace-class Gaussian covariance (automatic at finite
    dimension).  The limit-existence clause of the full assumption is a
    convergence statement, not a computable predicate, and is deliberately
    replaced by these sufficient conditions.
    """

    stable_drift: bool
    spectral_abscissa: float
    jump_moment_finite: bool
    jump_second_moment: float
    trace_class: bool
    note: str = field(default="invariant-law existence verified via sufficient conditions only")

    @property
    def all_pass(self) -> bool:
        return self.stable_drift and self.jump_moment_finite and self.trace_class


def check_assumption_A_sufficient(model: OuLevyModel, sampler_probe_size: int = 1000) -> AssumptionAReport:
    ab = linops.spectral_abscissa(model.drift_matrix)
    moment = 0.0
    finite = True
    if model.has_jumps:
        j = model.jump
        if j.atoms is not None:
            moment = float(j.probs @ np.sum(j.atoms**2, axis=1))
        else:
            gen = np.random.Generator(np.random.Philox(key=np.array([0xA55, 0], dtype=np.uint64)))
            draws = np.atleast_2d(np.asarray(j.sampler(gen, sampler_probe_size), dtype=float))
            finite = bool(np.isfinite(draws).all())
            moment = float(np.mean(np.sum(draws**2, axis=1))) if finite else float("inf")
    return AssumptionAReport(
        stable_drift=ab < 0,
        spectral_abscissa=ab,
        jump_moment_finite=finite and np.isfinite(moment),
        jump_second_moment=moment,
        trace_class=True,
    )


@dataclass(frozen=True, eq=False)
class AdjointModel:
    """Time-reversal data: steady-state covariance and the adjoint drift.

    The adjoint drift is ``S A' S^{-1}`` for ``S`` the steady-state
    covariance; its semigroup drives the adjoint of the transition semigroup
    in ``L^2`` of the invariant Gaussian law.
    """

    base: OuLevyModel
    r_inf: np.ndarray
    m_inf: np.ndarray
    drift_matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.base.dim

    def as_model(self) -> OuLevyModel:
        """The adjoint dynamics as a centered jump-free model."""
        return OuLevyModel(drift_matrix=self.drift_matrix, noise_cov=self.base.noise_cov)

    def propagator(self, t: float) -> np.ndarray:
        return linops.matrix_exponential(self.drift_matrix, t)

    def gramian(self, t: float) -> np.ndarray:
        return self.as_model().snapshot(t).gramian

    def gamma_norm(self, t: float, x):
        from .control import gamma_norm

        return gamma_norm(self.as_model(), t, x)

    def gamma_operator_norm(self, t: float) -> float:
        from .control import gamma_operator_norm

        return gamma_operator_norm(self.as_model(), t)


def invariant_mean(model: OuLevyModel) -> np.ndarray:
    if not model.is_stable():
        raise linops.UnstableMatrixError("unstable drift: no invariant mean")
    return np.linalg.solve(model.drift_matrix, -model.drift_offset)


def build_adjoint(model: OuLevyModel, rank_tol: float = linops.DEFAULT_RANK_TOL) -> AdjointModel:
    """Build the adjoint model from the steady-state covariance.

    Requires a jump-free stable model with invertible steady-state
    covariance; otherwise the time-reversal is not an OU model of the same
    class and the construction fails in this truncation.
    """
    if model.has_jumps:
        raise ValueError("adjoint construction requires a jump-free model")
    r_inf = linops.lyapunov_solve(model.drift_matrix, model.noise_cov)
    w = np.linalg.eigvalsh(r_inf)
    if w.min() <= rank_tol * max(1.0, w.max()):
        raise ValueError("steady-state covariance is singular: adjoint construction fails in this truncation")
    a_tilde = r_inf @ np.linalg.solve(r_inf, model.drift_matrix).T
    return AdjointModel(base=model, r_inf=r_inf, m_inf=invariant_mean(model), drift_matrix=a_tilde)
