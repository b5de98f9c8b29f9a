"""Statistical comparison machinery for cross-validated model scores.

Implements the full decision procedure used to compare models and
augmentation settings across folds:

- Shapiro-Wilk normality check (Royston's 1995 small-sample approximation,
  valid for 3 <= n <= 50).
- One-way repeated-measures ANOVA (models as the within factor, folds as
  subjects), F on (k-1, (k-1)(n-1)) degrees of freedom.
- Tukey HSD post-hoc using the repeated-measures error term, with the
  studentized-range tail probability evaluated by direct numerical
  integration of its double-integral definition.
- Bartlett's test of equal variances.
- Independent two-sample t-test (pooled) and Welch's variant.
- Wilcoxon rank-sum with mid-ranks, exact two-sided p by enumeration for
  n_x + n_y <= 12, tie-corrected normal approximation otherwise.

Two-sample augmentation comparisons follow the fixed decision tree: both
samples normal (Shapiro-Wilk p > alpha) -> Bartlett -> pooled t if variances
equal else Welch; any normality failure -> Wilcoxon rank-sum.

All p-values are two-sided; ``significant`` always means p < alpha with
alpha = 0.05. No sphericity correction is applied to the repeated-measures
ANOVA (noted on every report).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence, TYPE_CHECKING

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, special

if TYPE_CHECKING:
    from .crossval import CVReport

ALPHA = 0.05


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class TestResult:
    test: str
    statistic: float
    p_value: float
    alpha: float = ALPHA
    df: tuple[float, ...] = ()
    degenerate: bool = False
    notes: tuple[str, ...] = ()

    @property
    def significant(self) -> bool:
        return (not math.isnan(self.p_value)) and self.p_value < self.alpha

    def as_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "df": list(self.df),
            "significant": self.significant,
            "degenerate": self.degenerate,
            "notes": list(self.notes),
        }


def _as_sample(x, name: str, min_n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size < min_n:
        raise StatsError(f"{name} needs at least {min_n} observations, got {arr.size}")
    if not np.isfinite(arr).all():
        raise StatsError(f"{name} sample contains non-finite values")
    return arr


def _t_sf_two_sided(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def _f_sf(f: float, d1: float, d2: float) -> float:
    if math.isinf(f):
        return 0.0
    return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)))


def _chi2_sf(x: float, df: float) -> float:
    return float(special.gammaincc(df / 2.0, x / 2.0))


# --------------------------------------------------------------------------
# Shapiro-Wilk (Royston 1995 approximation)
# --------------------------------------------------------------------------

_SW_C1 = (0.221157, -0.147981, -2.071190, 4.434685, -2.706056)
_SW_C2 = (0.042981, -0.293762, -1.752461, 5.682633, -3.582633)


def _poly(u: float, coeffs: Sequence[float]) -> float:
    return sum(c * u ** (i + 1) for i, c in enumerate(coeffs))


def shapiro_wilk(x: Sequence[float]) -> TestResult:
    """W statistic and approximate p-value for normality of ``x`` (3<=n<=50)."""
    arr = _as_sample(x, "shapiro_wilk", 3)
    n = arr.size
    if n > 50:
        raise StatsError(f"shapiro_wilk approximation is valid for n <= 50, got {n}")
    if np.ptp(arr) == 0.0:
        return TestResult(
            "shapiro_wilk", float("nan"), float("nan"),
            degenerate=True, notes=("zero variance: W undefined",),
        )

    m = special.ndtri((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    mm = float(m @ m)
    c = m / math.sqrt(mm)
    u = 1.0 / math.sqrt(n)

    a = np.empty(n)
    a_n = c[-1] + _poly(u, _SW_C1)
    if n > 5:
        a_n1 = c[-2] + _poly(u, _SW_C2)
        phi = (mm - 2 * m[-1] ** 2 - 2 * m[-2] ** 2) / (1 - 2 * a_n**2 - 2 * a_n1**2)
        a[2:-2] = m[2:-2] / math.sqrt(phi)
        a[-1], a[-2] = a_n, a_n1
        a[0], a[1] = -a_n, -a_n1
    else:
        phi = (mm - 2 * m[-1] ** 2) / (1 - 2 * a_n**2)
        a[1:-1] = m[1:-1] / math.sqrt(phi)
        a[-1] = a_n
        a[0] = -a_n

    xs = np.sort(arr)
    w = float((a @ xs) ** 2 / ((xs - xs.mean()) @ (xs - xs.mean())))
    w = min(w, 1.0)

    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
        return TestResult("shapiro_wilk", w, p)
    if n <= 11:
        gamma = 0.459 * n - 2.273
        lw = -math.log(gamma - math.log1p(-w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sigma = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
    else:
        ln_n = math.log(n)
        lw = math.log1p(-w)
        mu = -1.5861 - 0.31082 * ln_n - 0.083751 * ln_n**2 + 0.0038915 * ln_n**3
        sigma = math.exp(-0.4803 - 0.082676 * ln_n + 0.0030302 * ln_n**2)
    z = (lw - mu) / sigma
    return TestResult("shapiro_wilk", w, float(special.ndtr(-z)))


# --------------------------------------------------------------------------
# Repeated-measures ANOVA and Tukey HSD
# --------------------------------------------------------------------------

def _groups_matrix(groups, min_k: int) -> np.ndarray:
    rows = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if len(rows) < min_k:
        raise StatsError(f"need at least {min_k} groups, got {len(rows)}")
    n = rows[0].size
    if any(r.size != n for r in rows):
        raise StatsError("groups must have equal length (same folds)")
    if n < 2:
        raise StatsError("each group needs at least 2 aligned observations")
    mat = np.vstack(rows)
    if not np.isfinite(mat).all():
        raise StatsError("group scores contain non-finite values")
    return mat


def _rm_decomposition(mat: np.ndarray) -> tuple[float, float, float, float]:
    """Sums of squares (treatment, subject, error) and the grand mean.

    Deviations are taken about the mean of the marginal means (equal to the
    grand mean in this balanced design) so identical groups yield exactly
    zero treatment variation."""
    grand = mat.mean()
    k, n = mat.shape
    row_means = mat.mean(axis=1)
    col_means = mat.mean(axis=0)
    ss_treat = n * float(((row_means - row_means.mean()) ** 2).sum())
    ss_subj = k * float(((col_means - col_means.mean()) ** 2).sum())
    ss_total = float(((mat - grand) ** 2).sum())
    ss_err = max(ss_total - ss_treat - ss_subj, 0.0)
    return ss_treat, ss_subj, ss_err, grand


def anova_rm(groups) -> TestResult:
    """One-way repeated-measures ANOVA over a k-groups x n-folds matrix."""
    mat = _groups_matrix(groups, min_k=3)
    k, n = mat.shape
    ss_treat, _, ss_err, _ = _rm_decomposition(mat)
    ss_total = float(((mat - mat.mean()) ** 2).sum())
    eps = 1e-12 * max(ss_total, 1e-300)
    df_t, df_e = float(k - 1), float((k - 1) * (n - 1))
    if ss_treat <= eps:
        return TestResult("anova_rm", 0.0, 1.0, df=(df_t, df_e))
    if ss_err <= eps:
        return TestResult(
            "anova_rm", float("inf"), 0.0, df=(df_t, df_e),
            degenerate=True, notes=("zero residual variance",),
        )
    f = (ss_treat / df_t) / (ss_err / df_e)
    return TestResult("anova_rm", f, _f_sf(f, df_t, df_e), df=(df_t, df_e))


_GL_NODES, _GL_WEIGHTS = leggauss(240)


def _range_cdf(r: float, k: int) -> float:
    """P(range of k iid standard normals <= r)."""
    if r <= 0:
        return 0.0
    lo, hi = -12.0, 10.0
    u = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * _GL_WEIGHTS
    phi = np.exp(-0.5 * u * u) / math.sqrt(2 * math.pi)
    inner = (special.ndtr(u + r) - special.ndtr(u)) ** (k - 1)
    return float(min(k * np.sum(w * phi * inner), 1.0))


def studentized_range_sf(q: float, k: int, df: float) -> float:
    """Upper tail P(Q > q) of the studentized range with k groups and df
    error degrees of freedom, by quadrature over the scale distribution."""
    if q <= 0:
        return 1.0
    if k < 2:
        raise StatsError("studentized range needs k >= 2")
    if df > 1e5:
        return 1.0 - _range_cdf(q, k)

    half_nu = df / 2.0
    log_norm = half_nu * math.log(df) - math.lgamma(half_nu) - (half_nu - 1) * math.log(2.0)

    def integrand(s: float) -> float:
        if s <= 0:
            return 0.0
        log_pdf = log_norm + (df - 1) * math.log(s) - df * s * s / 2.0
        return _range_cdf(q * s, k) * math.exp(log_pdf)

    cdf, _ = integrate.quad(integrand, 0.0, np.inf, limit=200)
    return float(min(max(1.0 - cdf, 0.0), 1.0))


@dataclass(frozen=True)
class PairwiseComparison:
    group_a: str
    group_b: str
    mean_a: float
    mean_b: float
    result: TestResult

    @property
    def mean_diff(self) -> float:
        return self.mean_a - self.mean_b

    def as_dict(self) -> dict:
        return {
            "group_a": self.group_a,
            "group_b": self.group_b,
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "mean_diff": self.mean_diff,
            "mean_diff_pp": 100.0 * self.mean_diff,
            **self.result.as_dict(),
        }


def tukey_hsd(groups, names: Sequence[str] | None = None) -> list[PairwiseComparison]:
    """All-pairs Tukey HSD using the repeated-measures error term, so the
    post-hoc is consistent with :func:`anova_rm`."""
    mat = _groups_matrix(groups, min_k=2)
    k, n = mat.shape
    names = list(names) if names is not None else [f"group{i}" for i in range(k)]
    if len(names) != k:
        raise StatsError("one name per group required")
    _, _, ss_err, _ = _rm_decomposition(mat)
    df_e = float((k - 1) * (n - 1))
    ms_err = ss_err / df_e
    means = mat.mean(axis=1)

    out = []
    for a, b in combinations(range(k), 2):
        delta = float(means[a] - means[b])
        if ms_err == 0.0:
            p, q, degenerate = (1.0, 0.0, False) if delta == 0.0 else (0.0, float("inf"), True)
        else:
            q = abs(delta) / math.sqrt(ms_err / n)
            p = studentized_range_sf(q, k, df_e)
            degenerate = False
        result = TestResult(
            "tukey_hsd", q, p, df=(float(k), df_e), degenerate=degenerate
        )
        out.append(PairwiseComparison(names[a], names[b], float(means[a]), float(means[b]), result))
    return out


# --------------------------------------------------------------------------
# Two-sample tests
# --------------------------------------------------------------------------

def bartlett(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Bartlett's test of equal variances for two samples (chi-square, df=1)."""
    xa = _as_sample(x, "bartlett", 2)
    ya = _as_sample(y, "bartlett", 2)
    vx, vy = float(xa.var(ddof=1)), float(ya.var(ddof=1))
    if vx == 0.0 or vy == 0.0:
        raise StatsError("bartlett requires nonzero variance in both samples")
    nx, ny = xa.size, ya.size
    n_tot, k = nx + ny, 2
    sp2 = ((nx - 1) * vx + (ny - 1) * vy) / (n_tot - k)
    num = (n_tot - k) * math.log(sp2) - ((nx - 1) * math.log(vx) + (ny - 1) * math.log(vy))
    corr = 1.0 + (1.0 / (nx - 1) + 1.0 / (ny - 1) - 1.0 / (n_tot - k)) / (3.0 * (k - 1))
    stat = max(num / corr, 0.0)
    return TestResult("bartlett", stat, _chi2_sf(stat, k - 1), df=(float(k - 1),))


def t_test_independent(
    x: Sequence[float], y: Sequence[float], equal_variance: bool = True
) -> TestResult:
    """Two-sided independent t-test: pooled variance, or Welch with
    Welch-Satterthwaite degrees of freedom."""
    xa = _as_sample(x, "t_test", 2)
    ya = _as_sample(y, "t_test", 2)
    nx, ny = xa.size, ya.size
    mx, my = float(xa.mean()), float(ya.mean())
    vx, vy = float(xa.var(ddof=1)), float(ya.var(ddof=1))
    diff = mx - my

    if equal_variance:
        df = float(nx + ny - 2)
        sp2 = ((nx - 1) * vx + (ny - 1) * vy) / df
        se = math.sqrt(sp2 * (1.0 / nx + 1.0 / ny))
        name = "t_test_equal_variance"
    else:
        sx, sy = vx / nx, vy / ny
        se = math.sqrt(sx + sy)
        if sx + sy > 0:
            df = (sx + sy) ** 2 / (sx**2 / (nx - 1) + sy**2 / (ny - 1))
        else:
            df = float(nx + ny - 2)
        name = "welch_t_test"

    if se == 0.0:
        if diff == 0.0:
            return TestResult(
                name, 0.0, 1.0, df=(df,), degenerate=True,
                notes=("both samples constant and equal",),
            )
        return TestResult(
            name, math.copysign(float("inf"), diff), 0.0, df=(df,),
            degenerate=True, notes=("zero variance with distinct means",),
        )
    t = diff / se
    return TestResult(name, t, _t_sf_two_sided(t, df), df=(df,))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


EXACT_WILCOXON_MAX_N = 12


def wilcoxon_rank_sum(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Rank-sum test with mid-ranks for ties.

    Exact two-sided p by full enumeration of rank assignments when
    n_x + n_y <= 12; otherwise normal approximation with tie-corrected
    variance and a 0.5 continuity correction.
    """
    xa = _as_sample(x, "wilcoxon", 1)
    ya = _as_sample(y, "wilcoxon", 1)
    nx, ny = xa.size, ya.size
    pooled = np.concatenate([xa, ya])
    ranks = _midranks(pooled)
    w_obs = float(ranks[:nx].sum())
    n_tot = nx + ny
    expected = nx * (n_tot + 1) / 2.0
    dev = abs(w_obs - expected)

    if n_tot <= EXACT_WILCOXON_MAX_N:
        count = 0
        total = 0
        for idx in combinations(range(n_tot), nx):
            total += 1
            w = float(ranks[list(idx)].sum())
            if abs(w - expected) >= dev - 1e-9:
                count += 1
        return TestResult(
            "wilcoxon_rank_sum", w_obs, count / total, df=(),
            notes=("exact enumeration",),
        )

    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts).sum()) / (n_tot * (n_tot - 1)))
    var = nx * ny / 12.0 * ((n_tot + 1) - tie_term)
    if var <= 0:
        return TestResult(
            "wilcoxon_rank_sum", w_obs, 1.0, degenerate=True,
            notes=("all pooled values tied",),
        )
    z = max(dev - 0.5, 0.0) / math.sqrt(var)
    p = min(2.0 * float(special.ndtr(-z)), 1.0)
    return TestResult("wilcoxon_rank_sum", w_obs, p, notes=("normal approximation",))


# --------------------------------------------------------------------------
# Decision procedures
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AugmentationComparison:
    branch: str
    chosen: TestResult
    shapiro_first: TestResult
    shapiro_second: TestResult
    bartlett_result: TestResult | None = None
    notes: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "branch": self.branch,
            "chosen": self.chosen.as_dict(),
            "shapiro_first": self.shapiro_first.as_dict(),
            "shapiro_second": self.shapiro_second.as_dict(),
            "bartlett": self.bartlett_result.as_dict() if self.bartlett_result else None,
            "notes": list(self.notes),
        }


def compare_augmentation(
    no_aug: Sequence[float], aug: Sequence[float], alpha: float = ALPHA
) -> AugmentationComparison:
    """Pick and run the appropriate two-sample test for an augmentation effect.

    Both samples normal per Shapiro-Wilk (p > alpha) -> Bartlett decides
    between the pooled t-test (equal variances) and Welch's test; otherwise
    the Wilcoxon rank-sum is used. Degenerate (constant) samples are treated
    as non-normal.
    """
    sw1 = shapiro_wilk(no_aug)
    sw2 = shapiro_wilk(aug)
    notes: list[str] = []
    both_normal = (
        not sw1.degenerate and not sw2.degenerate
        and sw1.p_value > alpha and sw2.p_value > alpha
    )
    if sw1.degenerate or sw2.degenerate:
        notes.append("constant sample treated as non-normal")

    if not both_normal:
        chosen = wilcoxon_rank_sum(no_aug, aug)
        return AugmentationComparison(
            "wilcoxon_rank_sum", chosen, sw1, sw2, notes=tuple(notes)
        )

    bart = bartlett(no_aug, aug)
    equal_var = bart.p_value > alpha
    chosen = t_test_independent(no_aug, aug, equal_variance=equal_var)
    branch = "t_test_equal_variance" if equal_var else "welch_t_test"
    return AugmentationComparison(branch, chosen, sw1, sw2, bart, tuple(notes))


@dataclass(frozen=True)
class ComparisonReport:
    model_names: tuple[str, ...]
    normality: tuple[TestResult, ...]
    omnibus: TestResult
    pairwise: tuple[PairwiseComparison, ...]
    augmentation_effects: tuple[tuple[str, AugmentationComparison], ...] = ()
    notes: tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "models": list(self.model_names),
            "normality": [r.as_dict() for r in self.normality],
            "omnibus": self.omnibus.as_dict(),
            "pairwise": [p.as_dict() for p in self.pairwise],
            "augmentation_effects": [
                {"model": name, **effect.as_dict()}
                for name, effect in self.augmentation_effects
            ],
            "notes": list(self.notes),
        }


def compare_score_sets(names: Sequence[str], groups) -> ComparisonReport:
    """Shapiro-Wilk per group (advisory), repeated-measures ANOVA omnibus,
    Tukey HSD pairwise. ``groups`` is a k-models x n-folds score matrix with
    identical fold alignment across rows."""
    mat = _groups_matrix(groups, min_k=3)
    if len(names) != mat.shape[0]:
        raise StatsError("one name per score group required")
    normality = tuple(shapiro_wilk(row) for row in mat)
    omnibus = anova_rm(mat)
    pairwise = tuple(tukey_hsd(mat, names))
    notes = ["no sphericity correction applied"]
    for name, res in zip(names, normality):
        if res.degenerate:
            notes.append(f"normality check degenerate for {name} (constant scores)")
        elif res.significant:
            notes.append(f"normality rejected for {name} (p={res.p_value:.4f})")
    return ComparisonReport(tuple(names), normality, omnibus, pairwise,
                            notes=tuple(notes))


def compare_models(reports: Sequence["CVReport"]) -> ComparisonReport:
    """Compare CVReports' per-fold accuracies. All reports must share the
    same fold plan (checked via the plan digest).

    The omnibus and pairwise comparisons run over the non-augmented runs
    (all runs when no augmented ones are present); whenever a backbone
    appears both with and without augmentation, its two-sample augmentation
    effect is computed with the prescribed decision tree.
    """
    if len(reports) < 3:
        raise StatsError("model comparison needs at least 3 reports")
    digests = {r.fold_plan_digest for r in reports}
    if len(digests) != 1:
        raise StatsError("reports were produced on different fold plans")

    base = [r for r in reports if not r.augmentation] or list(reports)
    if len(base) < 3:
        raise StatsError("model comparison needs at least 3 runs per setting")
    result = compare_score_sets([r.label for r in base],
                                [r.fold_accuracies for r in base])

    by_backbone: dict[str, dict[bool, "CVReport"]] = {}
    for r in reports:
        by_backbone.setdefault(r.backbone, {})[r.augmentation] = r
    effects = tuple(
        (backbone, compare_augmentation(pair[False].fold_accuracies,
                                        pair[True].fold_accuracies))
        for backbone, pair in sorted(by_backbone.items())
        if False in pair and True in pair
    )
    return ComparisonReport(
        result.model_names, result.normality, result.omnibus, result.pairwise,
        augmentation_effects=effects, notes=result.notes,
    )
