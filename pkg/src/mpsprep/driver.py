"""The disentangling driver: per-bond gate optimization and the layer loop.

One run walks up to ``max_layers`` brickwall layers over the chain.  Layer µ
holds the gates of a single parity (odd-site bricks for odd µ, even-site
bricks for even µ); alternating the parity after every layer keeps the
optimization moving and is the standard local-minimum mitigation for this
ansatz.  Each gate is optimized by quasi-Newton line-search descent (BFGS)
on central-difference gradients of the bond entropy, starting from θ = 0
(where the exact gradient is available for the 2-Rényi cost) and from a few
seeded random kicks: θ = 0 sits on a saddle for states with real amplitudes,
and single-basin descent alone tends to strand the layer dynamics in poor
local minima.

After the last layer the state is truncated to a product state, the final
single-qubit layer is read off, and the compiled circuit's overlap error

    ε = || |ψ> - (prod_i T_D ∘ G_i†) |0...0> ||

is measured by running the circuit in preparation order with the same
truncation settings.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.optimize

from .entropy import (BondCostFunction, analytic_gradient_theta0,
                      entropies_from_singular_values, fd_gradient_of, tail_weight)
from .gates import (Circuit, CircuitLayer, TwoQubitGateParams, apply_circuit,
                    apply_gate, layer_sites, parity_of_layer, readoff_single_qubit)
from .mps import GammaLambdaMPS, overlap, truncate, zero_state_mps

DEFAULT_CUTOFF = 1e-7


@dataclass
class OptimizerOptions:
    """Per-gate optimization controls."""

    max_iters: int = 200          # quasi-Newton iterations per start
    grad_tol: float = 1e-9
    deep_grad_tol: float = 1e-12  # polish target once a bond is nearly dead
    deep_cost: float = 1e-9       # cost below which the deep tolerance applies
    deep_tail: float = 1e-6       # post-gate tail weight that counts as "nearly dead"
    fd_step: float = 1e-5
    restarts: int = 3             # extra seeded starts after the θ=0 descent
    perturb_scale: float = 0.4
    skip_cost: float = 1e-12      # bonds already this disentangled are skipped
    commit_tol: float = 1e-13     # minimum absolute improvement worth committing


@dataclass
class DisentangleConfig:
    """Run controls for one disentangling pass."""

    max_layers: int = 16
    max_bond: int | None = 64
    cutoff: float = DEFAULT_CUTOFF
    alpha_schedule: object = None   # None = default rule; float = constant; sequence = cycled
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    target_tail: float = 1e-10
    target_eps_site: float = 0.0
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.max_layers < 1:
            raise ValueError("max_layers must be >= 1")
        if self.max_bond is not None and self.max_bond < 1:
            raise ValueError("max_bond must be >= 1")
        if not 0.0 <= self.cutoff < 1.0:
            raise ValueError("cutoff must lie in [0, 1)")

    def alpha_for_layer(self, layer: int) -> float:
        """Rényi index used in layer ``layer`` (1-based).

        Default rule: α = 1/2 on every layer divisible by 3, α = 1 otherwise.
        """
        sched = self.alpha_schedule
        if sched is None:
            return 0.5 if layer % 3 == 0 else 1.0
        if isinstance(sched, (int, float)):
            return float(sched)
        seq = list(sched)
        return float(seq[(layer - 1) % len(seq)])

    def describe(self) -> dict:
        sched = self.alpha_schedule
        if sched is not None and not isinstance(sched, (int, float)):
            sched = list(map(float, sched))
        return {
            "max_layers": self.max_layers,
            "max_bond": self.max_bond,
            "cutoff": self.cutoff,
            "alpha_schedule": sched,
            "target_tail": self.target_tail,
            "target_eps_site": self.target_eps_site,
            "seed": self.seed,
            "threads": self.threads,
            "optimizer": asdict(self.optimizer),
        }


@dataclass
class DisentangleReport:
    """Diagnostics of one run.

    ``tails[mu]`` and ``bond_dims[mu]`` hold the per-bond tail weight
    -log(λ_1²) and bond dimension after layer mu (row 0 is the input state).
    ``eps`` is the truncated-circuit overlap error and
    ``eps_site = 1 - (1 - eps)^(1/n)`` its per-site version.
    """

    n: int
    tails: np.ndarray
    bond_dims: np.ndarray
    alphas: list[float]
    eps: float
    eps_site: float
    converged_layer: int | None
    flagged_layers: list[int]
    max_bond_seen: int
    reverse_p_max: float
    layers_run: int
    config: dict
    layer_seconds: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        """JSON-ready payload.  Wall times are deliberately excluded so that
        identical seeds and flags give byte-identical reports."""
        return {
            "n": self.n,
            "layers_run": self.layers_run,
            "converged_layer": self.converged_layer,
            "eps": self.eps,
            "eps_site": self.eps_site,
            "max_bond_seen": self.max_bond_seen,
            "reverse_p_max": self.reverse_p_max,
            "flagged_layers": self.flagged_layers,
            "alphas": self.alphas,
            "tails": [[float(x) for x in row] for row in self.tails],
            "bond_dims": [[int(x) for x in row] for row in self.bond_dims],
            "config": self.config,
        }

    def tails_csv(self) -> str:
        """Long-format CSV of the tail-weight matrix, bonds 1-based."""
        lines = ["layer,bond,S_inf,bond_dim"]
        for mu in range(self.tails.shape[0]):
            for b in range(self.tails.shape[1]):
                lines.append(f"{mu},{b + 1},{self.tails[mu, b]:.17g},{int(self.bond_dims[mu, b])}")
        return "\n".join(lines) + "\n"


def eps_to_eps_site(eps: float, n: int) -> float:
    """Per-site overlap error 1 - (1 - ε)^(1/n), clamped at 1 for ε >= 1."""
    if eps >= 1.0:
        return 1.0
    return float(1.0 - (1.0 - eps) ** (1.0 / n))


# ---------------------------------------------------------------------------
# per-gate optimization
# ---------------------------------------------------------------------------

def _descend(cost: BondCostFunction, theta0: np.ndarray, opts: OptimizerOptions,
             analytic_zero: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    """Line-search descent (BFGS) on central-difference gradients."""

    def jac(t):
        if analytic_zero is not None and not np.any(t):
            return analytic_zero
        return fd_gradient_of(cost, t, opts.fd_step)

    res = scipy.optimize.minimize(cost, np.asarray(theta0, dtype=float), jac=jac,
                                  method="BFGS",
                                  options={"maxiter": opts.max_iters,
                                           "gtol": opts.grad_tol})
    return res.x, float(res.fun)


def _polish(cost: BondCostFunction, theta: np.ndarray, f: float,
            opts: OptimizerOptions) -> tuple[np.ndarray, float]:
    """Backtracking steepest descent to squeeze the last digits out of a basin.

    BFGS's Wolfe search gives up near machine-precision minima; plain
    descent with a doubling/backtracking step keeps converging there because
    the complement-form entropy stays relatively precise arbitrarily close
    to a product spectrum.  Nearly-dead bonds (cost below ``deep_cost``) are
    polished to the tighter ``deep_grad_tol``: any weight the optimizer
    leaves beneath the truncation threshold is silently discarded by the
    commit and would end up as circuit error invisible to later layers.
    """
    step = 0.25
    for _ in range(opts.max_iters):
        g = fd_gradient_of(cost, theta, opts.fd_step)
        gn = float(np.linalg.norm(g))
        if gn < (opts.deep_grad_tol if f < opts.deep_cost else opts.grad_tol):
            break
        step = min(step * 2.0, 2.0 / gn)
        moved = False
        while step * gn > 1e-15:
            cand = theta - step * g
            fc = cost(cand)
            if fc <= f - 1e-4 * step * gn * gn:
                theta, f = cand, fc
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        if f < 1e-24:
            break
    return theta, f


def optimize_gate(mps: GammaLambdaMPS, site: int, alpha: float,
                  opts: OptimizerOptions | None = None,
                  rng: np.random.Generator | None = None) -> TwoQubitGateParams:
    """Angles locally minimizing the post-gate bond entropy, starting at θ=0.

    θ=0 sits on a saddle (or a flat spot) for many physical states, so after
    the descent from zero the optimizer re-descends from a few seeded random
    kicks and keeps the best basin found.  Never returns a gate whose
    committed cost would exceed the current bond entropy; when nothing
    improves, the identity (θ = 0) comes back.
    """
    opts = opts or OptimizerOptions()
    rng = rng if rng is not None else np.random.default_rng(0)
    cost = BondCostFunction(mps, site, alpha)
    zero = np.zeros(9)
    c0 = cost(zero)
    if c0 < opts.skip_cost:
        return TwoQubitGateParams.identity()

    analytic_zero = analytic_gradient_theta0(mps, site) if alpha == 2 else None
    best_theta, best_cost = _descend(cost, zero, opts, analytic_zero=analytic_zero)

    for _ in range(opts.restarts):
        if best_cost < 1e-13:
            break
        theta, f = _descend(cost, rng.normal(0.0, opts.perturb_scale, size=9), opts)
        if f < best_cost:
            best_theta, best_cost = theta, f

    tail = float(entropies_from_singular_values(cost.spectrum_values(best_theta), np.inf))
    if tail < opts.deep_tail and alpha != 2.0:
        # near a dead bond the α<=1 entropies are cone-shaped in the angles
        # (S ~ sqrt of the tail weight), which strands finite-difference
        # descent; all Rényi entropies vanish together, so the exact kill is
        # polished on the smooth 2-Rényi surface instead
        smooth = BondCostFunction(mps, site, 2.0)
        theta, f2 = _descend(smooth, best_theta, opts)
        theta, _ = _polish(smooth, theta, f2, opts)
        f = cost(theta)
        if f < best_cost:
            best_theta, best_cost = theta, f
    else:
        best_theta, best_cost = _polish(cost, best_theta, best_cost, opts)

    if best_cost < c0 - opts.commit_tol:
        return TwoQubitGateParams(best_theta)
    return TwoQubitGateParams.identity()


# ---------------------------------------------------------------------------
# the outer loop
# ---------------------------------------------------------------------------

def _gate_rng(seed: int, layer: int, site: int) -> np.random.Generator:
    return np.random.default_rng([seed, layer, site])


def disentangle(mps: GammaLambdaMPS, config: DisentangleConfig | None = None
                ) -> tuple[Circuit, DisentangleReport, GammaLambdaMPS]:
    """Run the full layer loop on a canonical input MPS.

    Returns the assembled circuit (disentangling direction, including the
    final single-qubit readoff), the diagnostics report, and the state after
    the last gate layer (before the product-state truncation).
    """
    config = config or DisentangleConfig()
    opts = config.optimizer
    n = mps.n
    state = mps

    tails_rows = [np.array([tail_weight(s) for s in state.lambdas])]
    bond_rows = [np.array(state.bond_dims(), dtype=int)]
    alphas: list[float] = []
    flagged: list[int] = []
    layer_seconds: list[float] = []
    layers: list[CircuitLayer] = []
    max_bond_seen = max(state.bond_dims())
    converged: int | None = 0 if np.all(tails_rows[0] < config.target_tail) else None

    mu = 0
    while converged is None and mu < config.max_layers:
        mu += 1
        t0 = time.perf_counter()
        parity = parity_of_layer(mu)
        alpha = config.alpha_for_layer(mu)
        alphas.append(alpha)
        sites = list(layer_sites(parity, n))
        gates: list[tuple[int, TwoQubitGateParams]] = []

        if config.threads > 1:
            # snapshot policy: optimize every brick against the pre-layer
            # state (exact for disjoint supports), then commit in site order
            pre = state
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                futures = [pool.submit(optimize_gate, pre, s, alpha, opts,
                                       _gate_rng(config.seed, mu, s)) for s in sites]
                params_by_site = [f.result() for f in futures]
            for s, params in zip(sites, params_by_site):
                if params.is_identity():
                    continue
                state, spec, _ = apply_gate(state, s, params, config.max_bond, config.cutoff)
                gates.append((s, params))
                max_bond_seen = max(max_bond_seen, len(spec))
        else:
            # sequential policy: each brick sees its predecessors' commits
            for s in sites:
                params = optimize_gate(state, s, alpha, opts,
                                       _gate_rng(config.seed, mu, s))
                if params.is_identity():
                    continue
                state, spec, _ = apply_gate(state, s, params, config.max_bond, config.cutoff)
                gates.append((s, params))
                max_bond_seen = max(max_bond_seen, len(spec))

        layers.append(CircuitLayer(parity=parity, gates=gates))
        tails_rows.append(np.array([tail_weight(sp) for sp in state.lambdas]))
        bond_rows.append(np.array(state.bond_dims(), dtype=int))
        layer_seconds.append(time.perf_counter() - t0)

        if np.max(tails_rows[-1]) > np.max(tails_rows[-2]) + 1e-12:
            flagged.append(mu)
        if np.all(tails_rows[-1] < config.target_tail):
            converged = mu
        elif config.target_eps_site > 0.0:
            interim = _assemble_circuit(n, layers, state)
            eps_now, _ = _overlap_error_detail(mps, interim, config.max_bond, config.cutoff)
            if eps_to_eps_site(eps_now, n) <= config.target_eps_site:
                converged = mu

    circuit = _assemble_circuit(n, layers, state)
    eps, p_max = _overlap_error_detail(mps, circuit, config.max_bond, config.cutoff)
    report = DisentangleReport(
        n=n,
        tails=np.array(tails_rows),
        bond_dims=np.array(bond_rows),
        alphas=alphas,
        eps=eps,
        eps_site=eps_to_eps_site(eps, n),
        converged_layer=converged,
        flagged_layers=flagged,
        max_bond_seen=int(max_bond_seen),
        reverse_p_max=p_max,
        layers_run=len(layers),
        config=config.describe(),
        layer_seconds=layer_seconds,
    )
    return circuit, report, state


def _assemble_circuit(n: int, layers: list[CircuitLayer], state: GammaLambdaMPS) -> Circuit:
    product, _ = truncate(state, 1, 0.0)
    readoff = readoff_single_qubit(product)
    return Circuit(n=n, layers=list(layers), readoff=readoff, direction="disentangle")


def _overlap_error_detail(mps: GammaLambdaMPS, circuit: Circuit,
                          max_bond: int | None, cutoff: float) -> tuple[float, float]:
    prepared, discards = apply_circuit(zero_state_mps(mps.n), circuit,
                                       max_bond, cutoff, reverse=True)
    fidelity = abs(overlap(mps, prepared))
    eps = float(np.sqrt(max(0.0, 2.0 - 2.0 * fidelity)))
    p_max = float(max(discards)) if discards else 0.0
    return eps, p_max


def overlap_error(mps: GammaLambdaMPS, circuit: Circuit,
                  max_bond: int | None = None, cutoff: float = 0.0) -> float:
    """|| |ψ> - circuit†|0...0> || with the given truncation settings.

    The preparation pass truncates to (max_bond, cutoff) after every gate;
    the distance is phase-aligned, i.e. uses |<ψ|ψ'>|.
    """
    eps, _ = _overlap_error_detail(mps, circuit, max_bond, cutoff)
    return eps
