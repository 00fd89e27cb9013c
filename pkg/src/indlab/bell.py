"""Bipartite Alice/Bob experiments: quantum sin^2 correlations, the exact
local-deterministic bound by enumeration, Monte Carlo trial generation, and
the no-signaling / free-choice statistical checks.

Angles are degrees in every interface; radians only ever appear inside
quantum_mismatch.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iter_product
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from .errors import CapacityError
from .randomness import TestReport

MAX_SETTINGS = 16
Z_THRESHOLD = 4.0
MIN_TRIALS_PER_PAIR = 1000


@dataclass(frozen=True)
class SettingSet:
    """The finite menu of analyzer angles, in degrees."""

    angles: tuple[float, ...]

    def __post_init__(self):
        if len(set(self.angles)) < 2:
            raise ValueError("need at least 2 distinct angles")
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    def __len__(self) -> int:
        return len(self.angles)

    def index(self, angle: float) -> int:
        return self.angles.index(float(angle))


DEFAULT_SETTINGS = SettingSet((0.0, 30.0, 60.0))


@dataclass(frozen=True)
class TrialRecord:
    a: float
    b: float
    alpha: int
    beta: int
    lambda_id: Optional[int] = None


class TrialSet:
    """Columnar container of trials; iterates as TrialRecord values.

    Kept columnar so 1e5-trial analyses stay vectorized.
    """

    def __init__(self, settings: SettingSet, a_idx, b_idx, alpha, beta,
                 lam=None, metadata: Optional[dict] = None):
        self.settings = settings
        self.a_idx = np.asarray(a_idx, dtype=np.int64)
        self.b_idx = np.asarray(b_idx, dtype=np.int64)
        self.alpha = np.asarray(alpha, dtype=np.int64)
        self.beta = np.asarray(beta, dtype=np.int64)
        self.lam = None if lam is None else np.asarray(lam, dtype=np.int64)
        self.metadata = metadata or {}

    def __len__(self) -> int:
        return len(self.alpha)

    def __iter__(self):
        angles = self.settings.angles
        for i in range(len(self)):
            yield TrialRecord(
                angles[self.a_idx[i]],
                angles[self.b_idx[i]],
                int(self.alpha[i]),
                int(self.beta[i]),
                None if self.lam is None else int(self.lam[i]),
            )

    def pair_counts(self) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        for ai, bi in zip(self.a_idx, self.b_idx):
            out[(int(ai), int(bi))] = out.get((int(ai), int(bi)), 0) + 1
        return out


def quantum_mismatch(a_deg: float, b_deg: float) -> float:
    """P(outcomes differ | settings a, b) = sin^2(a - b), angles in degrees."""
    return math.sin(math.radians(a_deg - b_deg)) ** 2


@dataclass(frozen=True)
class MismatchFunctional:
    """A linear combination sum_i coeff_i * P(L != R | a_i, b_i).

    With perfect_correlation set, only strategies reproducing the exact
    equal-setting correlation (response_L == response_R) are admissible in
    the local bound: any model whose average reproduces the sin^2 law has
    zero equal-setting mismatch, which forces agreement at every hidden
    state in the support.
    """

    terms: tuple[tuple[Fraction, float, float], ...]
    name: str = "custom"
    perfect_correlation: bool = False

    @property
    def degenerate(self) -> bool:
        return all(c == 0 for c, _, _ in self.terms)

    def settings(self) -> SettingSet:
        angles: list[float] = []
        for _, a, b in self.terms:
            for x in (a, b):
                if x not in angles:
                    angles.append(x)
        return SettingSet(tuple(angles))


def default_functional() -> MismatchFunctional:
    """P(0,60) - P(0,30) - P(30,60): at most 0 for every local model that
    honors perfect correlation, +1/4 for the sin^2 correlations."""
    return MismatchFunctional(
        (
            (Fraction(1), 0.0, 60.0),
            (Fraction(-1), 0.0, 30.0),
            (Fraction(-1), 30.0, 60.0),
        ),
        name="default",
        perfect_correlation=True,
    )


def chsh_functional() -> MismatchFunctional:
    """CHSH in mismatch form: local bound 0 over all strategies (no
    perfect-correlation input needed), quantum value sin^2(67.5) -
    3 sin^2(22.5) ~ 0.414."""
    return MismatchFunctional(
        (
            (Fraction(1), 45.0, -22.5),
            (Fraction(-1), 0.0, 22.5),
            (Fraction(-1), 0.0, -22.5),
            (Fraction(-1), 45.0, 22.5),
        ),
        name="chsh",
    )


@dataclass(frozen=True)
class LocalDeterministicStrategy:
    """Fixed responses per setting for each wing: the deterministic vertices
    over which every locally-causal mixture decomposes."""

    response_l: tuple[int, ...]
    response_r: tuple[int, ...]

    def value(self, functional: MismatchFunctional, settings: SettingSet) -> Fraction:
        total = Fraction(0)
        for coeff, a, b in functional.terms:
            mismatch = self.response_l[settings.index(a)] != self.response_r[settings.index(b)]
            if mismatch:
                total += coeff
        return total


def local_bound_bruteforce(
    settings: SettingSet, functional: MismatchFunctional
) -> tuple[Fraction, LocalDeterministicStrategy]:
    """Exact maximum of the functional over all deterministic strategies.

    Enumerates Alice's 2^|S| responses; for each, Bob's optimum separates
    across his settings, so the maximum over all 2^|S| x 2^|S| strategies
    is computed exactly (rational arithmetic) without listing the products.
    Under a perfect_correlation functional Bob's responses are pinned to
    Alice's instead.
    """
    s = len(settings)
    if s > MAX_SETTINGS:
        raise CapacityError(f"{s} settings exceeds the {MAX_SETTINGS}-setting cap")
    terms_by_b: dict[int, list[tuple[Fraction, int]]] = {}
    for coeff, a, b in functional.terms:
        terms_by_b.setdefault(settings.index(b), []).append((coeff, settings.index(a)))
    best: Optional[Fraction] = None
    best_strategy: Optional[LocalDeterministicStrategy] = None
    for l_mask in range(1 << s):
        response_l = tuple((l_mask >> i) & 1 for i in range(s))
        total = Fraction(0)
        response_r = [0] * s
        for bi in range(s):
            options = []
            for rv in (0, 1):
                v = Fraction(0)
                for coeff, ai in terms_by_b.get(bi, []):
                    if response_l[ai] != rv:
                        v += coeff
                options.append(v)
            if functional.perfect_correlation:
                response_r[bi] = response_l[bi]
                total += options[response_l[bi]]
            elif options[1] > options[0]:
                response_r[bi] = 1
                total += options[1]
            else:
                total += options[0]
        if best is None or total > best:
            best = total
            best_strategy = LocalDeterministicStrategy(response_l, tuple(response_r))
    return best, best_strategy


def local_bound_enumerate_all(
    settings: SettingSet, functional: MismatchFunctional
) -> tuple[Fraction, int]:
    """Plain double enumeration over every (L, R) pair; the oracle for the
    factored search.  Returns (maximum over admissible strategies,
    strategies examined)."""
    s = len(settings)
    if s > 8:
        raise CapacityError("oracle enumeration limited to 8 settings")
    best = None
    count = 0
    for l_bits in iter_product((0, 1), repeat=s):
        for r_bits in iter_product((0, 1), repeat=s):
            count += 1
            if functional.perfect_correlation and l_bits != r_bits:
                continue
            v = LocalDeterministicStrategy(l_bits, r_bits).value(functional, settings)
            if best is None or v > best:
                best = v
    return best, count


def quantum_value(functional: MismatchFunctional) -> float:
    """The functional evaluated on the sin^2 mismatch probabilities."""
    return float(
        sum(float(c) * quantum_mismatch(a, b) for c, a, b in functional.terms)
    )


def run_bipartite(
    model: str,
    settings: SettingSet,
    n_trials: int,
    seed: int,
    fixed_pair: Optional[tuple[float, float]] = None,
    hv_ensemble: Optional[Sequence[tuple[float, LocalDeterministicStrategy]]] = None,
    superdeterministic: bool = False,
) -> TrialSet:
    """Generate i.i.d. trial records.

    model "quantum": settings uniform (or fixed_pair); outcome mismatch with
    probability sin^2(a-b), equal/unequal outcomes split evenly, which is
    the unique symmetric completion with uniform marginals.  At a == b the
    mismatch probability is exactly 0, so correlation is perfect, not
    statistical.

    model "hv": draw lambda from the ensemble weights, answer from the
    strategy at lambda.  With superdeterministic=True the settings are
    functions of lambda instead of free draws.

    model "signaling": a deliberately pathological toy whose Alice outcome
    copies Bob's setting parity; exists to fail the no-signaling check.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    gen = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 0]))
    s = len(settings)
    meta = {
        "model": model,
        "settings": list(settings.angles),
        "n_trials": n_trials,
        "seed": seed,
        "superdeterministic": superdeterministic,
    }
    if fixed_pair is not None:
        a_idx = np.full(n_trials, settings.index(fixed_pair[0]), dtype=np.int64)
        b_idx = np.full(n_trials, settings.index(fixed_pair[1]), dtype=np.int64)
        meta["fixed_pair"] = list(fixed_pair)
    else:
        a_idx = gen.integers(0, s, n_trials)
        b_idx = gen.integers(0, s, n_trials)

    if model == "quantum":
        angles = np.asarray(settings.angles)
        p_mismatch = np.sin(np.radians(angles[a_idx] - angles[b_idx])) ** 2
        differ = gen.random(n_trials) < p_mismatch
        alpha = gen.integers(0, 2, n_trials)
        beta = np.where(differ, 1 - alpha, alpha)
        return TrialSet(settings, a_idx, b_idx, alpha, beta, None, meta)

    if model == "hv":
        if not hv_ensemble:
            raise ValueError("hv model needs a strategy ensemble")
        weights = np.asarray([w for w, _ in hv_ensemble], dtype=float)
        if abs(weights.sum() - 1.0) > 1e-9 or np.any(weights < 0):
            raise ValueError("ensemble weights must form a distribution")
        lam = gen.choice(len(hv_ensemble), size=n_trials, p=weights / weights.sum())
        if superdeterministic:
            a_idx = lam % s
            b_idx = (lam // s) % s
            meta["fixed_pair"] = None
        l_tables = np.asarray([st.response_l for _, st in hv_ensemble], dtype=np.int64)
        r_tables = np.asarray([st.response_r for _, st in hv_ensemble], dtype=np.int64)
        alpha = l_tables[lam, a_idx]
        beta = r_tables[lam, b_idx]
        return TrialSet(settings, a_idx, b_idx, alpha, beta, lam, meta)

    if model == "signaling":
        alpha = b_idx % 2
        beta = gen.integers(0, 2, n_trials)
        return TrialSet(settings, a_idx, b_idx, alpha, beta, None, meta)

    raise ValueError(f"unknown model {model!r}")


def _chi2_z(table: np.ndarray) -> tuple[float, bool]:
    """z-equivalent of a contingency-table independence test.

    Returns (z, degenerate). Rows/columns with no mass are dropped; a table
    with fewer than two surviving rows or columns is degenerate and cannot
    witness dependence.
    """
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return 0.0, True
    chi2, p, dof, _ = sps.chi2_contingency(table)
    z = sps.norm.isf(max(p, 1e-300))
    return float(max(0.0, z)), False


def no_signaling_check(trials: TrialSet, threshold: float = Z_THRESHOLD) -> tuple[TestReport, TestReport]:
    """Marginal independence both ways: Alice's outcome distribution must
    not depend on Bob's setting, and vice versa."""
    counts = trials.pair_counts()
    deficit = [pc for pc in counts.values() if pc < MIN_TRIALS_PER_PAIR]
    if deficit or not counts:
        raise ValueError(
            f"need >= {MIN_TRIALS_PER_PAIR} trials per settings pair; "
            f"smallest observed count {min(deficit) if deficit else 0}"
        )
    s = len(trials.settings)
    reports = []
    for wing, own_idx, other_idx, outcome in (
        ("alice", trials.a_idx, trials.b_idx, trials.alpha),
        ("bob", trials.b_idx, trials.a_idx, trials.beta),
    ):
        worst = 0.0
        details = {}
        for setting in range(s):
            mask = own_idx == setting
            table = np.zeros((s, 2))
            for other in range(s):
                sub = outcome[mask & (other_idx == other)]
                table[other, 0] = np.sum(sub == 0)
                table[other, 1] = np.sum(sub == 1)
            z, degenerate = _chi2_z(table)
            details[f"setting_{setting}_z"] = z if not degenerate else None
            if not degenerate:
                worst = max(worst, z)
        reports.append(
            TestReport(
                test_name=f"no_signaling[{wing}]",
                statistic=worst,
                expected=0.0,
                z_score=worst,
                passed=worst <= threshold,
                threshold=threshold,
                parameters=details,
            )
        )
    return reports[0], reports[1]


def free_choice_check(trials: TrialSet, threshold: float = Z_THRESHOLD) -> TestReport:
    """Independence of (a, b), (a, lambda), and (b, lambda).

    Degenerate marginals (a single observed setting or hidden value) make
    the test inconclusive: reported as skipped, never as passed.
    """
    if trials.lam is None:
        raise ValueError("free-choice check needs lambda_id on the records")
    if len(trials) < MIN_TRIALS_PER_PAIR:
        raise ValueError(f"need >= {MIN_TRIALS_PER_PAIR} trials")
    s = len(trials.settings)
    n_lam = int(trials.lam.max()) + 1
    pairs = {
        "a_vs_b": (trials.a_idx, s, trials.b_idx, s),
        "a_vs_lambda": (trials.a_idx, s, trials.lam, n_lam),
        "b_vs_lambda": (trials.b_idx, s, trials.lam, n_lam),
    }
    worst = 0.0
    details = {}
    all_degenerate = True
    for name, (u, nu, v, nv) in pairs.items():
        table = np.zeros((nu, nv))
        np.add.at(table, (u, v), 1)
        z, degenerate = _chi2_z(table)
        details[name + "_z"] = None if degenerate else z
        if not degenerate:
            all_degenerate = False
            worst = max(worst, z)
    return TestReport(
        test_name="free_choice",
        statistic=worst,
        expected=0.0,
        z_score=worst,
        passed=(not all_degenerate) and worst <= threshold,
        threshold=threshold,
        parameters=details,
        skipped=all_degenerate,
    )


def perfect_correlation_violations(trials: TrialSet) -> int:
    """Number of equal-setting trials with unequal outcomes (exact count)."""
    mask = trials.a_idx == trials.b_idx
    return int(np.sum(trials.alpha[mask] != trials.beta[mask]))


@dataclass
class FunctionalEstimate:
    value: float
    per_term: list[dict]

    @property
    def six_sigma(self) -> float:
        return float(sum(abs(t["coeff"]) * 6 * t["sigma"] for t in self.per_term))


def empirical_functional(trials: TrialSet, functional: MismatchFunctional) -> FunctionalEstimate:
    """The functional evaluated on empirical mismatch frequencies."""
    angles = trials.settings.angles
    value = 0.0
    per_term = []
    for coeff, a, b in functional.terms:
        mask = (trials.a_idx == angles.index(a)) & (trials.b_idx == angles.index(b))
        n = int(mask.sum())
        if n == 0:
            raise ValueError(f"no trials at settings pair ({a}, {b})")
        freq = float(np.mean(trials.alpha[mask] != trials.beta[mask]))
        expected = quantum_mismatch(a, b)
        sigma = math.sqrt(max(freq * (1 - freq), 1.0 / n) / n)
        value += float(coeff) * freq
        per_term.append(
            {"a": a, "b": b, "coeff": float(coeff), "n": n,
             "mismatch": freq, "quantum": expected, "sigma": sigma}
        )
    return FunctionalEstimate(value, per_term)


# -- persistence -------------------------------------------------------------


def save_trials_csv(path: str, trials: TrialSet) -> None:
    """CSV of a_deg,b_deg,alpha,beta,lambda_id plus a JSON metadata sidecar."""
    angles = trials.settings.angles
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["a_deg", "b_deg", "alpha", "beta", "lambda_id"])
        lam = trials.lam
        for i in range(len(trials)):
            w.writerow(
                [
                    angles[trials.a_idx[i]],
                    angles[trials.b_idx[i]],
                    int(trials.alpha[i]),
                    int(trials.beta[i]),
                    "" if lam is None else int(lam[i]),
                ]
            )
    with open(path + ".meta.json", "w") as f:
        json.dump(trials.metadata, f, indent=2, sort_keys=True)
        f.write("\n")


def load_trials_csv(path: str) -> TrialSet:
    import os

    meta = {}
    if os.path.exists(path + ".meta.json"):
        with open(path + ".meta.json") as f:
            meta = json.load(f)
    a_deg, b_deg, alpha, beta, lam = [], [], [], [], []
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header[:4] != ["a_deg", "b_deg", "alpha", "beta"]:
            raise ValueError(f"unexpected CSV header {header!r}")
        for row in r:
            a_deg.append(float(row[0]))
            b_deg.append(float(row[1]))
            alpha.append(int(row[2]))
            beta.append(int(row[3]))
            lam.append(int(row[4]) if len(row) > 4 and row[4] != "" else -1)
    angles = meta.get("settings")
    if angles is None:
        angles = sorted(set(a_deg) | set(b_deg))
    settings = SettingSet(tuple(angles))
    lam_arr = None if all(v == -1 for v in lam) else lam
    return TrialSet(
        settings,
        [settings.index(a) for a in a_deg],
        [settings.index(b) for b in b_deg],
        alpha,
        beta,
        lam_arr,
        meta,
    )
