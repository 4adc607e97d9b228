"""Exact stochastic simulation of the OU-Levy dynamics.

Endpoint samples are exact in distribution: the Gaussian part is drawn from
the factorized time-``t`` Gramian and the compound-Poisson part is
transported jump by jump with uniformly distributed ages, so no inequality
check pays a time-discretization penalty unless it genuinely needs paths.
Path-based functionality (stochastic convolution, change-of-measure weights,
the coupled pair, the perturbed-drift estimator) uses a fixed grid whose
only approximation is the left-point rule in the stochastic integral of the
weight exponent; the discrete weight is still an exact martingale for
previsible integrands.

Randomness comes from counter-based Philox streams keyed by
``(seed, stream_id)``.  Monte Carlo estimators assign one stream per block
of ``MC_BLOCK`` replicates and fold block results in stream order, so
results are bitwise reproducible regardless of how blocks are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import linops
from .control import min_energy_control
from .model import OuLevyModel, SemilinearSpec

#: Replicates per RNG stream in vectorized Monte Carlo estimators.
MC_BLOCK = 4096

_MASK64 = (1 << 64) - 1


def mix_seed(*parts: int) -> int:
    """Derive an independent 64-bit sub-seed from integer parts (splitmix)."""
    z = 0x9E3779B97F4A7C15
    for p in parts:
        z = (z + (int(p) & _MASK64)) & _MASK64
        z ^= z >> 30
        z = (z * 0xBF58476D1CE4E5B9) & _MASK64
        z ^= z >> 27
        z = (z * 0x94D049BB133111EB) & _MASK64
        z ^= z >> 31
    return z


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by (seed, stream_id).

    Identical keys reproduce identical draws regardless of scheduling; the
    draw index is the Philox counter advanced by the generator itself.
    """

    seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _stream_blocks(seed: int, n: int) -> Iterator[tuple[np.random.Generator, int]]:
    """Fixed-size replicate blocks, one keyed stream per block."""
    done = 0
    block = 0
    while done < n:
        size = min(MC_BLOCK, n - done)
        yield RngStream(seed, block).generator(), size
        done += size
        block += 1


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error (sample stdev / sqrt(n))."""

    mean: float
    std_error: float
    n: int
    seed: int


@dataclass(frozen=True)
class GirsanovWeight:
    """Change-of-measure weight in log form, with the control's squared size."""

    log_rho: float
    integral_psi_sq: float

    @property
    def rho(self) -> float:
        return float(np.exp(self.log_rho))


class NonFiniteValueError(RuntimeError):
    """A test function returned a non-finite value during estimation."""


def eval_rows(f: Callable, pts: np.ndarray) -> np.ndarray:
    """Evaluate ``f`` on row-stacked points, tolerating non-vectorized f."""
    try:
        vals = np.asarray(f(pts), dtype=float)
    except Exception:
        vals = None
    if vals is None or vals.shape != (pts.shape[0],):
        vals = np.array([float(f(p)) for p in pts])
    return vals


# ---------------------------------------------------------------------------
# jump transport
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _JumpTransport:
    diagonalizable: bool
    modes: np.ndarray | None
    rates: np.ndarray | None
    modes_inv: np.ndarray | None
    drift: np.ndarray

    def apply(self, ages: np.ndarray, sizes: np.ndarray) -> np.ndarray:
        """``e^{v A} xi`` for each (age v, jump xi) pair, vectorized."""
        if self.diagonalizable:
            w = self.modes_inv @ sizes.T
            w = w * np.exp(np.multiply.outer(self.rates, ages))
            return (self.modes @ w).T.real
        out = np.empty_like(sizes)
        for i, (v, xi) in enumerate(zip(ages, sizes)):
            out[i] = linops.matrix_exponential(self.drift, float(v)) @ xi
        return out


def _jump_transport(model: OuLevyModel) -> _JumpTransport:
    a = model.drift_matrix
    try:
        rates, modes = np.linalg.eig(a)
        modes_inv = np.linalg.inv(modes)
        ok = (
            np.linalg.cond(modes) < 1e8
            and np.abs((modes * rates) @ modes_inv - a).max() <= 1e-10 * (1.0 + np.abs(a).max())
        )
    except np.linalg.LinAlgError:
        ok = False
    if not ok:
        return _JumpTransport(False, None, None, None, a)
    return _JumpTransport(True, modes, rates, modes_inv, a)


def _jump_block(model: OuLevyModel, t: float, gen: np.random.Generator, size: int,
                transport: _JumpTransport) -> np.ndarray:
    """Compound-Poisson contribution for a block of replicates."""
    j = model.jump
    counts = gen.poisson(j.rate * t, size=size)
    total = int(counts.sum())
    out = np.zeros((size, model.dim))
    if total == 0:
        return out
    ages = gen.uniform(0.0, t, size=total)
    if j.atoms is not None:
        idx = gen.choice(j.atoms.shape[0], size=total, p=j.probs)
        sizes = j.atoms[idx]
    else:
        sizes = np.atleast_2d(np.asarray(j.sampler(gen, total), dtype=float))
    moved = transport.apply(ages, sizes)
    rows = np.repeat(np.arange(size), counts)
    np.add.at(out, rows, moved)
    return out


# ---------------------------------------------------------------------------
# endpoint sampling
# ---------------------------------------------------------------------------


def _endpoint_noise_block(model: OuLevyModel, t: float, gen: np.random.Generator, size: int,
                          snap: linops.SemigroupSnapshot, transport: _JumpTransport | None) -> np.ndarray:
    """Endpoint minus the propagated start: drift shift + Gaussian + jumps."""
    z = gen.standard_normal((size, model.dim))
    noise = snap.mean_shift + z @ snap.gramian_sqrt.sqrt_matrix.T
    if model.has_jumps:
        noise = noise + _jump_block(model, t, gen, size, transport)
    return noise


def sample_ou_endpoint(model: OuLevyModel, t: float, x, rng: RngStream) -> np.ndarray:
    """One exact draw of the state at time ``t`` started at ``x``.

    The Gaussian part is ``N(e^{tA} x + m_t, R_t)`` via the Gramian
    factorization; each of the ``Poisson(rate*t)`` jumps is transported by
    the propagator over an independent uniform age.  No time grid enters.
    """
    if t <= 0:
        raise ValueError("time must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    snap = model.snapshot(t)
    transport = _jump_transport(model) if model.has_jumps else None
    noise = _endpoint_noise_block(model, t, rng.generator(), 1, snap, transport)
    return snap.propagator @ x + noise[0]


def iter_endpoint_noise(model: OuLevyModel, t: float, n: int, seed: int) -> Iterator[np.ndarray]:
    """Blocks of endpoint noise, shared across start points.

    Yields ``(block, d)`` arrays of ``X_t - e^{tA} X_0`` realizations; adding
    ``e^{tA} x`` gives endpoint samples started at ``x``.  Reusing one block
    for several starts gives common-random-number coupling.
    """
    snap = model.snapshot(t)
    transport = _jump_transport(model) if model.has_jumps else None
    for gen, size in _stream_blocks(seed, n):
        yield _endpoint_noise_block(model, t, gen, size, snap, transport)


def estimate_semigroup(model: OuLevyModel, t: float, x, f: Callable, n: int, seed: int) -> McEstimate:
    """Monte Carlo estimate of ``E f(X_t)`` started at ``x``.

    ``f`` should accept row-stacked points ``(m, d)`` and return ``(m,)``;
    scalar-only callables are evaluated row by row.  Estimation aborts on the
    first non-finite value of ``f``.
    """
    if n < 100:
        raise ValueError("at least 100 replicates are required")
    x = np.asarray(x, dtype=float).reshape(-1)
    start = model.snapshot(t).propagator @ x
    s1 = 0.0
    s2 = 0.0
    done = 0
    for noise in iter_endpoint_noise(model, t, n, seed):
        vals = eval_rows(f, start + noise)
        if not np.isfinite(vals).all():
            bad = int(np.count_nonzero(~np.isfinite(vals)))
            raise NonFiniteValueError(
                f"test function returned {bad} non-finite value(s) near replicate {done}"
            )
        s1 += float(vals.sum())
        s2 += float((vals * vals).sum())
        done += vals.shape[0]
    mean = s1 / n
    var = max((s2 - n * mean * mean) / (n - 1), 0.0)
    return McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=seed)


# ---------------------------------------------------------------------------
# stochastic convolution paths and change-of-measure weights
# ---------------------------------------------------------------------------


def wa_path(model: OuLevyModel, grid, rng: RngStream) -> np.ndarray:
    """Sample the stochastic convolution on a grid by exact recursion.

    The marginal at each grid time is exactly Gaussian with the Gramian
    covariance of the elapsed time: each step propagates the previous value
    and adds an independent Gaussian innovation with the step Gramian.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.shape[0] < 2 or grid[0] != 0.0 or (np.diff(grid) <= 0).any():
        raise ValueError("grid must increase strictly from 0")
    gen = rng.generator()
    d = model.dim
    out = np.zeros((grid.shape[0], d))
    cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    for k in range(grid.shape[0] - 1):
        delta = float(grid[k + 1] - grid[k])
        if delta not in cache:
            snap = model.snapshot(delta)
            cache[delta] = (snap.propagator, snap.gramian_sqrt.sqrt_matrix)
        prop, root = cache[delta]
        out[k + 1] = prop @ out[k] + root @ gen.standard_normal(d)
    return out


def girsanov_weight(model: OuLevyModel, grid, increments, u) -> GirsanovWeight:
    """Fold a control and Brownian increments into a change-of-measure weight.

    Left-point (previsible) rule: ``log rho = sum u_k . dW_k - sum |u_k|^2
    dt_k / 2``, accumulated in the log domain.  ``u`` may be given on the
    left points ``(K, d)`` or on the full grid ``(K+1, d)`` (last value
    unused).  The pairing uses plain inner products: a control of size
    ``|u|`` corresponds to a drift perturbation ``R^{1/2} u``.
    """
    grid = np.asarray(grid, dtype=float)
    deltas = np.diff(grid)
    if (deltas <= 0).any():
        raise ValueError("grid must be strictly increasing")
    k = deltas.shape[0]
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    if increments.shape[0] != k:
        raise ValueError(f"expected {k} increments, got {increments.shape[0]}")
    if u.shape[0] == k + 1:
        u = u[:k]
    if u.shape != increments.shape:
        raise ValueError("control and increment shapes are incompatible")
    if u.shape[1] != model.dim:
        raise ValueError("control dimension does not match the model")
    sq = float(np.sum(np.sum(u * u, axis=1) * deltas))
    log_rho = float(np.sum(u * increments)) - 0.5 * sq
    return GirsanovWeight(log_rho=log_rho, integral_psi_sq=sq)


def girsanov_functional_estimates(
    model: OuLevyModel,
    t: float,
    u,
    K: int,
    n: int,
    seed: int,
    funcs: dict[str, Callable[[np.ndarray], np.ndarray]],
) -> dict[str, McEstimate]:
    """Monte Carlo estimates of functionals of the weight for a fixed control.

    ``u`` is a callable of time or an array on the left points / full grid;
    each entry of ``funcs`` maps the vector of log-weights of a block to
    per-replicate values.  One pass over the increments serves all
    functionals, with block folding in stream order.
    """
    grid = np.linspace(0.0, t, K + 1)
    delta = t / K
    if callable(u):
        uvals = np.array([np.asarray(u(s), dtype=float).reshape(-1) for s in grid[:-1]])
    else:
        uvals = np.atleast_2d(np.asarray(u, dtype=float))
        if uvals.shape[0] == 1:
            uvals = np.repeat(uvals, K, axis=0)
        elif uvals.shape[0] == K + 1:
            uvals = uvals[:K]
    if uvals.shape != (K, model.dim):
        raise ValueError("control values have the wrong shape")
    half_sq = 0.5 * delta * float(np.sum(uvals * uvals))
    root = np.sqrt(delta)

    sums = {name: [0.0, 0.0] for name in funcs}
    for gen, size in _stream_blocks(seed, n):
        acc = np.zeros(size)
        for k in range(K):
            dw = gen.standard_normal((size, model.dim)) * root
            acc += dw @ uvals[k]
        log_rho = acc - half_sq
        for name, fn in funcs.items():
            vals = np.asarray(fn(log_rho), dtype=float)
            sums[name][0] += float(vals.sum())
            sums[name][1] += float((vals * vals).sum())
    out = {}
    for name, (s1, s2) in sums.items():
        mean = s1 / n
        var = max((s2 - n * mean * mean) / (n - 1), 0.0)
        out[name] = McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=seed)
    return out


# ---------------------------------------------------------------------------
# joint increments for path estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _StepSampler:
    """Joint draw of a Brownian increment and the matching convolution
    innovation over one step, with the exact cross-covariance."""

    delta: float
    propagator: np.ndarray
    cross_over_delta: np.ndarray
    cond_root: np.ndarray
    root_delta: float

    def draw(self, gen: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        d = self.propagator.shape[0]
        dw = gen.standard_normal((size, d)) * self.root_delta
        zeta = gen.standard_normal((size, d))
        eta = dw @ self.cross_over_delta.T + zeta @ self.cond_root.T
        return dw, eta


def _step_sampler(model: OuLevyModel, delta: float) -> _StepSampler:
    snap = model.snapshot(delta)
    cross = linops.convolution_factor(model.drift_matrix, model.noise_sqrt().sqrt_matrix, delta)
    cond = snap.gramian - (cross @ cross.T) / delta
    cond_root = linops.psd_sqrt_pinv(0.5 * (cond + cond.T)).sqrt_matrix
    return _StepSampler(
        delta=delta,
        propagator=snap.propagator,
        cross_over_delta=cross / delta,
        cond_root=cond_root,
        root_delta=float(np.sqrt(delta)),
    )


# ---------------------------------------------------------------------------
# coupled pair
# ---------------------------------------------------------------------------


def _coupling_control(model: OuLevyModel, t: float, x, y, K: int):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    ctrl = min_energy_control(model, t, y - x, K)
    if not ctrl.feasible:
        raise ValueError("x - y is outside the steerable domain at this horizon")
    if not ctrl.accepted:
        raise RuntimeError(
            f"null control rejected: terminal residual {ctrl.terminal_residual:.3e}"
        )
    return x, y, ctrl


def _coupled_blocks(model, t, x, y, K, seed, n):
    x, y, ctrl = _coupling_control(model, t, x, y, K)
    u = ctrl.values[:-1]
    delta = t / K
    step = _step_sampler(model, delta)
    snap = model.snapshot(t)
    transport = _jump_transport(model) if model.has_jumps else None
    base = snap.propagator @ y + snap.mean_shift
    half_sq = 0.5 * delta * float(np.sum(u * u))
    for gen, size in _stream_blocks(seed, n):
        conv = np.zeros((size, model.dim))
        acc = np.zeros(size)
        for k in range(K):
            dw, eta = step.draw(gen, size)
            acc += dw @ u[k]
            conv = conv @ step.propagator.T + eta
        endpoints = base + conv
        if model.has_jumps:
            endpoints = endpoints + _jump_block(model, t, gen, size, transport)
        yield endpoints, acc - half_sq, ctrl


def sample_coupled_pair(model: OuLevyModel, t: float, x, y, K: int, rng: RngStream):
    """One draw of the coupled endpoint and its change-of-measure weight.

    Simulates the path started at ``y`` and, from the same Brownian
    increments, the weight of the drift shift that carries the law started at
    ``x`` onto it: under the reweighted measure the returned endpoint is a
    sample of the dynamics started at ``x``.  The two trajectories differ by
    the steered state of the null control, so re-integrating from ``x`` with
    the shifted noise reproduces the endpoint up to the control's terminal
    residual (at most 1e-8 relative for accepted controls).
    """
    if t <= 0:
        raise ValueError("horizon must be positive")
    x, y, ctrl = _coupling_control(model, t, x, y, K)
    u = ctrl.values[:-1]
    delta = t / K
    step = _step_sampler(model, delta)
    snap = model.snapshot(t)
    transport = _jump_transport(model) if model.has_jumps else None
    gen = rng.generator()
    conv = np.zeros((1, model.dim))
    acc = 0.0
    for k in range(K):
        dw, eta = step.draw(gen, 1)
        acc += float(dw[0] @ u[k])
        conv = conv @ step.propagator.T + eta
    endpoint = snap.propagator @ y + snap.mean_shift + conv[0]
    if model.has_jumps:
        endpoint = endpoint + _jump_block(model, t, gen, 1, transport)[0]
    sq = delta * float(np.sum(u * u))
    return endpoint, GirsanovWeight(log_rho=acc - 0.5 * sq, integral_psi_sq=sq)


def coupled_expectation(model: OuLevyModel, t: float, x, y,
                        g: Callable[[np.ndarray, np.ndarray], np.ndarray],
                        n: int, K: int, seed: int) -> McEstimate:
    """Monte Carlo mean of ``g(rho, endpoint)`` over coupled-pair replicates."""
    if n < 100:
        raise ValueError("at least 100 replicates are required")
    s1 = 0.0
    s2 = 0.0
    for endpoints, log_rho, _ in _coupled_blocks(model, t, x, y, K, seed, n):
        vals = np.asarray(g(np.exp(log_rho), endpoints), dtype=float)
        s1 += float(vals.sum())
        s2 += float((vals * vals).sum())
    mean = s1 / n
    var = max((s2 - n * mean * mean) / (n - 1), 0.0)
    return McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=seed)


# ---------------------------------------------------------------------------
# perturbed-drift (weak-solution) estimation
# ---------------------------------------------------------------------------


def _require_semilinear_setting(model: OuLevyModel) -> None:
    if model.has_jumps:
        raise ValueError("perturbed-drift estimation requires a jump-free model")
    if float(np.abs(model.drift_offset).max(initial=0.0)) != 0.0:
        raise ValueError("perturbed-drift estimation requires a zero drift offset")


def _semilinear_blocks(model, spec, t, x, K, seed, n, want_sq_integral=False):
    """Path blocks for the perturbed-drift weight: yields per-block final
    convolution values, log-weights, and (optionally) the time integral of
    the squared convolution norm."""
    x = np.asarray(x, dtype=float).reshape(-1)
    delta = t / K
    step = _step_sampler(model, delta)
    rfac = model.noise_sqrt()
    pinv_root = rfac.pinv_sqrt_matrix
    proj = rfac.range_projector

    # deterministic mean path e^{t_k A} x at the left grid points
    mean_path = np.empty((K, model.dim))
    mean_path[0] = x
    for k in range(1, K):
        mean_path[k] = step.propagator @ mean_path[k - 1]

    for gen, size in _stream_blocks(seed, n):
        conv = np.zeros((size, model.dim))
        log_rho = np.zeros(size)
        sq = np.zeros(size)
        for k in range(K):
            state = conv + mean_path[k]
            drift = np.asarray(spec.drift_fn(state), dtype=float)
            if drift.shape != state.shape:
                raise ValueError("drift function must map (m, d) states to (m, d) values")
            out_of_range = drift - drift @ proj.T
            norms = np.linalg.norm(out_of_range, axis=1)
            scale = np.maximum(1.0, np.linalg.norm(drift, axis=1))
            bad = norms > 1e-8 * scale
            if bad.any():
                idx = int(np.argmax(bad))
                raise RuntimeError(
                    f"drift value leaves the range of R^(1/2) at state {state[idx]}"
                )
            psi = drift @ pinv_root.T
            dw, eta = step.draw(gen, size)
            log_rho += np.einsum("ij,ij->i", psi, dw) - 0.5 * delta * np.einsum("ij,ij->i", psi, psi)
            nxt = conv @ step.propagator.T + eta
            if want_sq_integral:
                sq += 0.5 * delta * (
                    np.einsum("ij,ij->i", conv, conv) + np.einsum("ij,ij->i", nxt, nxt)
                )
            conv = nxt
        yield conv, log_rho, sq


def semilinear_estimate(model: OuLevyModel, spec: SemilinearSpec, t: float, x,
                        f: Callable, n: int, K: int, seed: int) -> McEstimate:
    """Weighted Monte Carlo estimate of the perturbed-drift expectation.

    Per replicate the stochastic convolution is advanced exactly on the grid;
    the drift perturbation enters only through the previsible weight
    ``rho = exp(sum psi_k . dW_k - sum |psi_k|^2 dt / 2)`` with
    ``psi = R^{-1/2} F(state)``, and the estimate is the mean of
    ``rho * f(endpoint)``.  If the weight's sample mean drifts from 1 by more
    than three standard errors, the grid is refined once (K doubled).
    """
    if n < 100:
        raise ValueError("at least 100 replicates are required")
    _require_semilinear_setting(model)
    x = np.asarray(x, dtype=float).reshape(-1)

    def run(k_steps: int):
        end_term = model.propagator(t) @ x
        s1 = s2 = r1 = r2 = 0.0
        for conv, log_rho, _ in _semilinear_blocks(model, spec, t, x, k_steps, seed, n):
            rho = np.exp(log_rho)
            vals = rho * eval_rows(f, conv + end_term)
            if not np.isfinite(vals).all():
                raise NonFiniteValueError("non-finite weighted value in perturbed-drift estimate")
            s1 += float(vals.sum())
            s2 += float((vals * vals).sum())
            r1 += float(rho.sum())
            r2 += float((rho * rho).sum())
        mean = s1 / n
        var = max((s2 - n * mean * mean) / (n - 1), 0.0)
        rho_mean = r1 / n
        rho_var = max((r2 - n * rho_mean * rho_mean) / (n - 1), 0.0)
        est = McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=seed)
        return est, rho_mean, float(np.sqrt(rho_var / n))

    est, rho_mean, rho_se = run(K)
    if abs(rho_mean - 1.0) > 3.0 * max(rho_se, 1e-300):
        est, _, _ = run(2 * K)
    return est


def semilinear_rho_moments(model: OuLevyModel, spec: SemilinearSpec, t: float, x,
                           powers, n: int, K: int, seed: int) -> dict[float, McEstimate]:
    """Monte Carlo moments ``E rho^p`` of the perturbed-drift weight."""
    _require_semilinear_setting(model)
    powers = [float(p) for p in powers]
    sums = {p: [0.0, 0.0] for p in powers}
    for _, log_rho, _ in _semilinear_blocks(model, spec, t, x, K, seed, n):
        for p in powers:
            vals = np.exp(p * log_rho)
            sums[p][0] += float(vals.sum())
            sums[p][1] += float((vals * vals).sum())
    out = {}
    for p, (s1, s2) in sums.items():
        mean = s1 / n
        var = max((s2 - n * mean * mean) / (n - 1), 0.0)
        out[p] = McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=seed)
    return out


def wa_square_exp_moment(model: OuLevyModel, t: float, lam: float, n: int, K: int, seed: int) -> McEstimate:
    """Monte Carlo estimate of ``E exp(lam * int_0^t |W_A(s)|^2 ds)``.

    The path integral is accumulated by the trapezoid rule on the exact-grid
    convolution samples.
    """
    delta = t / K
    step = _step_sampler(model, delta)
    s1 = s2 = 0.0
    for gen, size in _stream_blocks(seed, n):
        conv = np.zeros((size, model.dim))
        sq = np.zeros(size)
        for _ in range(K):
            _, eta = step.draw(gen, size)
            nxt = conv @ step.propagator.T + eta
            sq += 0.5 * delta * (
                np.einsum("ij,ij->i", conv, conv) + np.einsum("ij,ij->i", nxt, nxt)
            )
            conv = nxt
        vals = np.exp(lam * sq)
        s1 += float(vals.sum())
        s2 += float((vals * vals).sum())
    mean = s1 / n
    var = max((s2 - n * mean * mean) / (n - 1), 0.0)
    return McEstimate(mean=mean, std_error=float(np.sqrt(var / n)), n=n, seed=seed)


def wa_exp_moment_constants(model: OuLevyModel) -> tuple[float, float]:
    """Unit-horizon exponential-moment constants of the convolution.

    Returns ``theta`` (trace of the unit-time Gramian) and
    ``C0 = sup over s in (0, 1] of E exp(|W_A(s)|^2 / (4 theta))``; the
    supremum sits at ``s = 1`` because the Gramian is monotone, and the
    expectation is a Gaussian quadratic moment in closed form.
    """
    snap = model.snapshot(1.0)
    theta = float(np.trace(snap.gramian))
    if theta <= 0:
        return 0.0, 1.0
    r = np.linalg.eigvalsh(snap.gramian)
    c0 = float(np.exp(-0.5 * np.sum(np.log1p(-r / (2.0 * theta)))))
    return theta, c0
