"""Repeat-until-success planning for growing a target W state.

An inventory is the multiset of W sizes currently held.  A policy looks at
the inventory and either restocks a fresh primitive, discards a register,
or fuses two registers with one partial-swap gate.  Fusion outcomes follow
the two-register distribution; in *physical* accounting the gate itself
heralds only a quarter of the time, and an unheralded attempt is modelled
as the loss of both extracted photons (both registers shrink by one).

Expected costs come from solving the absorbing Markov chain over
inventories exactly (the chain has cycles, so plain memoization does not
terminate); Monte Carlo runs replay the same chain with seeded streams.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol

import numpy as np

from .fusion import fuse2_analytic, fuse_chain
from .protocols import GATE_SUCCESS

ACCOUNTING = ("ideal", "physical")
BLOCK_SIZE = 4096
MAX_STATES = 5000


class UnreachableTargetError(ValueError):
    """The policy can get stuck in an inventory from which the target is unreachable."""

    def __init__(self, message: str, state: tuple[int, ...] = ()):
        super().__init__(message)
        self.state = state


# -- policies ---------------------------------------------------------------------

Move = tuple  # ("done",) | ("restock",) | ("discard", size) | ("fuse", a, b)


class Policy(Protocol):
    name: str

    def decide(self, inventory: tuple[int, ...], target: int, primitive: int) -> Move: ...

    def keep(self, residual: tuple[int, ...]) -> tuple[int, ...]: ...


@dataclass(frozen=True)
class GreedyLargest:
    """Fuse the two largest registers; restock when fewer than two are held.

    A pair whose fused size would overshoot the target is broken up by
    discarding its larger member.  Residual registers from a failed fusion
    are kept (``W_1`` included); empty ones vanish.
    """

    name: str = "greedy-largest"

    def decide(self, inventory, target, primitive):
        if target in inventory:
            return ("done",)
        if len(inventory) < 2:
            return ("restock",)
        a, b = inventory[0], inventory[1]
        if a + b - 1 > target:
            return ("discard", a)
        return ("fuse", a, b)

    def keep(self, residual):
        return tuple(r for r in residual if r > 0)


@dataclass(frozen=True)
class OneShot(GreedyLargest):
    """Like :class:`GreedyLargest` but every failed fusion discards its residuals."""

    name: str = "one-shot"

    def keep(self, residual):
        return ()


POLICIES = {"greedy-largest": GreedyLargest(), "one-shot": OneShot()}


def get_policy(policy) -> Policy:
    if isinstance(policy, str):
        try:
            return POLICIES[policy]
        except KeyError:
            raise ValueError(f"unknown policy {policy!r}; known: {', '.join(POLICIES)}") from None
    return policy


def _norm(inv) -> tuple[int, ...]:
    return tuple(sorted((x for x in inv if x > 0), reverse=True))


def _remove(inv: tuple[int, ...], *sizes: int) -> list[int]:
    out = list(inv)
    for s in sizes:
        out.remove(s)
    return out


def fusion_outcomes(a: int, b: int, accounting: str) -> list[tuple[Fraction, str, tuple[int, ...]]]:
    """``(probability, kind, produced registers)`` for one fusion attempt.

    ``kind`` is ``"success"``, ``"recycle"`` or ``"lost"`` (gate not heralded).
    """
    dist = fuse2_analytic(a, b)
    p_s = dist.entry("V").probability
    p_r = dist.entry("H").probability
    out = []
    herald = Fraction(1) if accounting == "ideal" else GATE_SUCCESS["pswap"]
    if p_s:
        out.append((herald * p_s, "success", (a + b - 1,)))
    if p_r:
        out.append((herald * p_r, "recycle", (a - 1, b - 1)))
    if herald != 1:
        out.append((1 - herald, "lost", (a - 1, b - 1)))
    return out


# -- exact expectation --------------------------------------------------------------

@dataclass
class _Transition:
    primitives: int = 0
    rounds: int = 0
    successors: list = field(default_factory=list)  # (prob, state)
    kinds: list = field(default_factory=list)  # fusion outcome kind per successor
    pair: tuple = ()


def _check_request(target: int, primitive: int, accounting: str) -> None:
    if primitive < 1 or target < 1:
        raise ValueError("sizes must be positive")
    if target < primitive:
        raise ValueError(f"target {target} is smaller than the primitive size {primitive}")
    if accounting not in ACCOUNTING:
        raise ValueError(f"accounting must be one of {ACCOUNTING}")


def _build_chain(target, primitive, policy, accounting):
    chain: dict[tuple[int, ...], _Transition] = {}
    order = []
    stack = [()]
    while stack:
        s = stack.pop()
        if s in chain or target in s:
            continue
        if len(chain) >= MAX_STATES:
            raise RuntimeError(f"inventory chain exceeds {MAX_STATES} states")
        move = policy.decide(s, target, primitive)
        tr = _Transition()
        kind = move[0]
        if kind == "restock":
            tr.primitives = 1
            tr.successors = [(Fraction(1), _norm(s + (primitive,)))]
        elif kind == "discard":
            tr.successors = [(Fraction(1), _norm(_remove(s, move[1])))]
        elif kind == "fuse":
            a, b = move[1], move[2]
            tr.rounds = 1
            tr.pair = (a, b)
            rest = _remove(s, a, b)
            for p, what, produced in fusion_outcomes(a, b, accounting):
                kept = produced if what == "success" else policy.keep(produced)
                tr.successors.append((p, _norm(rest + list(kept))))
                tr.kinds.append(what)
        else:
            raise ValueError(f"policy returned unknown move {move!r} in state {s}")
        chain[s] = tr
        order.append(s)
        stack.extend(t for _, t in tr.successors)
    return chain, order


def _check_absorbing(chain, order, target):
    # states that can reach the target, by backward search
    preds: dict = {}
    for s, tr in chain.items():
        for _, t in tr.successors:
            preds.setdefault(t, set()).add(s)
    good = set()
    frontier = [t for t in preds if target in t]
    while frontier:
        t = frontier.pop()
        for s in preds.get(t, ()):
            if s not in good:
                good.add(s)
                frontier.append(s)
    stuck = [s for s in order if s not in good]
    if stuck:
        # report the fullest stuck inventory: where the policy stalls
        s = max(stuck, key=len)
        raise UnreachableTargetError(
            f"target W_{target} cannot be reached from inventory {list(s)} under this policy", s
        )


def _solve_exact(chain, order, rewards):
    """Solve ``x = r + P x`` over transient states with exact Gaussian elimination."""
    idx = {s: i for i, s in enumerate(order)}
    n = len(order)
    rows = []
    for s in order:
        row: dict[int, Fraction] = {idx[s]: Fraction(1)}
        for p, t in chain[s].successors:
            if t in idx:
                row[idx[t]] = row.get(idx[t], Fraction(0)) - p
        rows.append([row, [Fraction(r(chain[s])) for r in rewards]])
    for col in range(n):
        piv = next(i for i in range(col, n) if rows[i][0].get(col))
        rows[col], rows[piv] = rows[piv], rows[col]
        prow, prhs = rows[col]
        inv = 1 / prow[col]
        prow = {k: v * inv for k, v in prow.items() if v}
        prhs = [v * inv for v in prhs]
        rows[col] = [prow, prhs]
        for i in range(n):
            if i == col:
                continue
            f = rows[i][0].get(col)
            if not f:
                continue
            row, rhs = rows[i]
            for k, v in prow.items():
                row[k] = row.get(k, Fraction(0)) - f * v
                if not row[k]:
                    del row[k]
            rows[i][1] = [x - f * y for x, y in zip(rhs, prhs)]
    return {s: rows[idx[s]][1] for s in order}


def _solve_float(chain, order, rewards):
    idx = {s: i for i, s in enumerate(order)}
    n = len(order)
    a = np.eye(n)
    b = np.zeros((n, len(rewards)))
    for s in order:
        i = idx[s]
        for p, t in chain[s].successors:
            if t in idx:
                a[i, idx[t]] -= float(p)
        b[i] = [r(chain[s]) for r in rewards]
    x = np.linalg.solve(a, b)
    return {s: list(x[idx[s]]) for s in order}


@dataclass
class EmpiricalStats:
    trials: int
    seed: int
    mean: dict
    stderr: dict
    herald_rate: float | None
    pair_stats: dict  # (a, b) -> {"attempts", "heralded", "success"}

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "mean": self.mean,
            "stderr": self.stderr,
            "herald_rate": self.herald_rate,
            "pairs": [
                {"pair": list(k), **v} for k, v in sorted(self.pair_stats.items(), reverse=True)
            ],
        }


@dataclass
class CostReport:
    target: int
    primitive: int
    policy: str
    accounting: str
    expected_primitives: Fraction | float
    expected_rounds: Fraction | float
    expected_gates: Fraction | float
    assumptions: list[str] = field(default_factory=list)
    empirical: EmpiricalStats | None = None

    def to_dict(self) -> dict:
        def num(x):
            if isinstance(x, Fraction):
                return {"num": x.numerator, "den": x.denominator, "value": float(x)}
            return {"value": float(x)}
        probs = fuse2_analytic(self.primitive, self.primitive)
        return {
            "protocol": "pswap-2",
            "sizes": {"target": self.target, "primitive": self.primitive},
            "policy": self.policy,
            "accounting": self.accounting,
            "probs": {e.outcome.value: num(e.probability) for e in probs.entries},
            "cost": {
                "primitives": num(self.expected_primitives),
                "rounds": num(self.expected_rounds),
                "gates": num(self.expected_gates),
            },
            "assumptions": list(self.assumptions),
            "empirical": None if self.empirical is None else self.empirical.to_dict(),
        }


def _assumptions(accounting: str) -> list[str]:
    notes = ["each fusion attempt uses one partial-swap gate"]
    if accounting == "physical":
        notes.append("each partial-swap application heralds with probability 1/4")
        notes.append("an unheralded attempt loses both extracted photons: registers W_a, W_b become W_(a-1), W_(b-1)")
    else:
        notes.append("ideal protocol accounting: the gate always acts")
    return notes


def expected_cost(target: int, primitive: int, policy="greedy-largest",
                  accounting: str = "ideal", exact: bool = True) -> CostReport:
    """Expected primitives, fusion rounds and gate applications to reach ``W_target``."""
    _check_request(target, primitive, accounting)
    pol = get_policy(policy)
    chain, order = _build_chain(target, primitive, pol, accounting)
    _check_absorbing(chain, order, target)
    rewards = [lambda t: t.primitives, lambda t: t.rounds]
    solve = _solve_exact if exact else _solve_float
    values = solve(chain, order, rewards) if order else {}
    prim, rounds = values.get((), [Fraction(1) if target == primitive else 0, 0]) if order else (0, 0)
    return CostReport(target, primitive, pol.name, accounting, prim, rounds, rounds, _assumptions(accounting))


# -- Monte Carlo ----------------------------------------------------------------------

def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for trial block ``block``.

    The key is the seed and the top 64 bits of the 256-bit counter hold the
    block index, so streams never overlap and any block can be regenerated
    alone.
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=block << 192))


def _blocks(trials: int):
    nb = -(-trials // BLOCK_SIZE)
    return [(b, min(BLOCK_SIZE, trials - b * BLOCK_SIZE)) for b in range(nb)]


_KIND_CODE = {"success": 0, "recycle": 1, "lost": 2}


@dataclass
class _CompiledChain:
    """Array form of the inventory chain for vectorized sampling."""

    terminal: np.ndarray  # bool[S]
    cum: np.ndarray  # float[S, K]; padded with inf
    nxt: np.ndarray  # int[S, K]
    kind: np.ndarray  # int[S, K]; -1 for non-fusion moves
    prim: np.ndarray  # int[S]
    rounds: np.ndarray  # int[S]
    pairs: list  # (a, b) or () per state


def _compile(target, primitive, policy, accounting) -> _CompiledChain:
    chain, order = _build_chain(target, primitive, policy, accounting)
    _check_absorbing(chain, order, target)
    states = list(order)
    if () not in chain:
        states.insert(0, ())
    for s in order:
        for _, t in chain[s].successors:
            if t not in chain and t not in states:
                states.append(t)
    idx = {s: i for i, s in enumerate(states)}
    n = len(states)
    k = max([len(tr.successors) for tr in chain.values()] + [1])
    cum = np.full((n, k), np.inf)
    nxt = np.tile(np.arange(n)[:, None], (1, k))
    kind = np.full((n, k), -1)
    prim = np.zeros(n, dtype=np.int64)
    rounds = np.zeros(n, dtype=np.int64)
    terminal = np.ones(n, dtype=bool)
    pairs: list = [()] * n
    for s, tr in chain.items():
        i = idx[s]
        terminal[i] = False
        prim[i], rounds[i] = tr.primitives, tr.rounds
        pairs[i] = tr.pair
        acc = 0.0
        for j, (p, t) in enumerate(tr.successors):
            acc += float(p)
            cum[i, j] = acc
            nxt[i, j] = idx[t]
            if tr.kinds:
                kind[i, j] = _KIND_CODE[tr.kinds[j]]
        cum[i, len(tr.successors) - 1] = np.inf
    return _CompiledChain(terminal, cum, nxt, kind, prim, rounds, pairs)


def _run_block(args):
    compiled, seed, block, count, max_steps = args
    c = compiled
    rng = block_generator(seed, block)
    state = np.zeros(count, dtype=np.int64)  # start from the empty inventory
    prims = np.zeros(count, dtype=np.int64)
    rounds = np.zeros(count, dtype=np.int64)
    visits = np.zeros(c.cum.shape, dtype=np.int64)
    live = np.arange(count)
    for _ in range(max_steps):
        live = live[~c.terminal[state[live]]]
        if live.size == 0:
            break
        s = state[live]
        u = rng.random(live.size)
        choice = (u[:, None] >= c.cum[s]).sum(axis=1)
        np.add.at(visits, (s, choice), 1)
        prims[live] += c.prim[s]
        rounds[live] += c.rounds[s]
        state[live] = c.nxt[s, choice]
    else:
        raise UnreachableTargetError(f"trials did not finish within {max_steps} steps")
    pairs: dict = {}
    for i, pair in enumerate(c.pairs):
        if not pair or not visits[i].any():
            continue
        st = pairs.setdefault(pair, {"attempts": 0, "heralded": 0, "success": 0})
        for j in range(c.cum.shape[1]):
            v = int(visits[i, j])
            st["attempts"] += v
            if c.kind[i, j] in (0, 1):
                st["heralded"] += v
            if c.kind[i, j] == 0:
                st["success"] += v
    sums = {"primitives": int(prims.sum()), "rounds": int(rounds.sum())}
    sq = {"primitives": int((prims * prims).sum()), "rounds": int((rounds * rounds).sum())}
    return sums, sq, pairs


def _merge(results):
    sums = {"primitives": 0, "rounds": 0}
    sq = {"primitives": 0, "rounds": 0}
    pairs: dict = {}
    for s, q, p in results:
        for k in sums:
            sums[k] += s[k]
            sq[k] += q[k]
        for key, st in p.items():
            acc = pairs.setdefault(key, {"attempts": 0, "heralded": 0, "success": 0})
            for k, v in st.items():
                acc[k] += v
    return sums, sq, pairs


def mean_stderr(total: int, total_sq: int, n: int) -> tuple[float, float | None]:
    """Sample mean and its standard error from exact integer sums (``None`` below two trials)."""
    mean = Fraction(total, n)
    if n < 2:
        return float(mean), None
    var = (Fraction(total_sq) - Fraction(total * total, n)) / (n - 1)
    return float(mean), math.sqrt(float(var) / n)


def monte_carlo(target: int, primitive: int, policy="greedy-largest", trials: int = 10000,
                seed: int = 0, accounting: str = "ideal", n_jobs: int = 1,
                max_steps: int = 10**7) -> EmpiricalStats:
    """Simulate ``trials`` independent growth runs.

    Every trial walks the same inventory chain as :func:`expected_cost`,
    drawing fusion outcomes from the exact class probabilities.  Registers
    of equal size are interchangeable, so tie-breaking by age does not
    change the sampled sizes.  Trials are grouped in fixed blocks of
    :data:`BLOCK_SIZE`, each with its own stream, and block results are
    merged with integer sums, so the output does not depend on ``n_jobs``.
    """
    _check_request(target, primitive, accounting)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    compiled = _compile(target, primitive, get_policy(policy), accounting)
    jobs = [(compiled, seed, b, c, max_steps) for b, c in _blocks(trials)]
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            results = list(ex.map(_run_block, jobs))
    else:
        results = [_run_block(j) for j in jobs]
    sums, sq, pairs = _merge(results)
    mean, err = {}, {}
    for k in sums:
        mean[k], err[k] = mean_stderr(sums[k], sq[k], trials)
    mean["gates"], err["gates"] = mean["rounds"], err["rounds"]
    attempts = sum(p["attempts"] for p in pairs.values())
    heralded = sum(p["heralded"] for p in pairs.values())
    rate = heralded / attempts if attempts else None
    return EmpiricalStats(trials, seed, mean, err, rate, pairs)


def plan(target: int, primitive: int, policy="greedy-largest", accounting: str = "ideal",
         trials: int = 0, seed: int = 0, n_jobs: int = 1, exact: bool = True) -> CostReport:
    """Analytic cost report, with a Monte Carlo section when ``trials > 0``."""
    report = expected_cost(target, primitive, policy, accounting, exact)
    if trials:
        report.empirical = monte_carlo(target, primitive, policy, trials, seed, accounting, n_jobs)
    return report


# -- outcome-class sampling ------------------------------------------------------------

@dataclass
class ClassFrequency:
    label: str
    exact: Fraction
    count: int
    trials: int

    @property
    def frequency(self) -> float:
        return self.count / self.trials

    @property
    def stderr(self) -> float:
        p = float(self.exact)
        return math.sqrt(p * (1 - p) / self.trials)

    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.frequency == float(self.exact) else math.inf
        return (self.frequency - float(self.exact)) / self.stderr


def sample_outcomes(sizes, trials: int, seed: int = 0) -> dict[str, ClassFrequency]:
    """Draw fusion outcome classes from the exact distribution of ``sizes``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dist = fuse_chain(sizes, method="analytic")
    classes = sorted({e.outcome.value for e in dist.entries})
    probs = {c: Fraction(0) for c in classes}
    for e in dist.entries:
        probs[e.outcome.value] += e.probability
    cum = np.cumsum([float(probs[c]) for c in classes])
    cum[-1] = 1.0
    counts = np.zeros(len(classes), dtype=np.int64)
    for b, c in _blocks(trials):
        u = block_generator(seed, b).random(c)
        idx = np.searchsorted(cum, u, side="right")
        counts += np.bincount(np.minimum(idx, len(classes) - 1), minlength=len(classes))
    return {c: ClassFrequency(c, probs[c], int(n), trials) for c, n in zip(classes, counts)}
