"""Decision rules operating on sufficient statistics of finite-domain samples.

A sample of size (ell, u) over a k-point domain is summarized by its labeled
cell counts ``labeled[x, y]`` (shape ``(k, 2)``) and unlabeled counts
``unlabeled[x]`` (shape ``(k,)``). Every ``decide`` method is vectorized:
leading axes are batch axes and the result is an integer array of hypothesis
indices into the learner's class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TWO_POINT_CLASS, HypothesisClass

H01_INDEX = TWO_POINT_CLASS.index((0, 1))
H10_INDEX = TWO_POINT_CLASS.index((1, 0))


class DomainSizeError(ValueError):
    pass


class SampleSizeError(ValueError):
    pass


@dataclass(frozen=True)
class SampleStats:
    """Sufficient statistics of one sample; ``ell`` and ``u`` are derived from the counts."""

    labeled_cells: np.ndarray
    unlabeled_counts: np.ndarray

    def __post_init__(self):
        lab = np.array(self.labeled_cells, dtype=np.int64)
        unl = np.array(self.unlabeled_counts, dtype=np.int64)
        if lab.ndim != 2 or lab.shape[1] != 2 or unl.shape != (lab.shape[0],):
            raise ValueError("labeled_cells must be (k, 2) and unlabeled_counts (k,)")
        if np.any(lab < 0) or np.any(unl < 0):
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "labeled_cells", lab)
        object.__setattr__(self, "unlabeled_counts", unl)

    @property
    def ell(self) -> int:
        return int(self.labeled_cells.sum())

    @property
    def u(self) -> int:
        return int(self.unlabeled_counts.sum())

    @classmethod
    def from_sample(cls, xs, ys, xu, domain_size: int = 2) -> "SampleStats":
        lab = np.zeros((domain_size, 2), dtype=np.int64)
        np.add.at(lab, (np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64)), 1)
        unl = np.bincount(np.asarray(xu, dtype=np.int64), minlength=domain_size)
        return cls(lab, unl)


class Learner:
    """Base class. Subclasses set the flags and implement ``decide``.

    ``statistic`` names the reduced statistic the exact engine may exploit
    (None means generic enumeration).
    """

    name = "learner"
    uses_unlabeled = False
    uses_marginal = False
    statistic: str | None = None
    hclass: HypothesisClass = TWO_POINT_CLASS

    def decide(self, labeled, unlabeled, marginal=None) -> np.ndarray:
        raise NotImplementedError

    def decide_stats(self, stats: SampleStats, marginal=None) -> int:
        return int(self.decide(stats.labeled_cells, stats.unlabeled_counts, marginal))

    def fit(self, xs, ys, xu=(), marginal=None) -> int:
        """Decide on a raw sample: labeled points ``(xs, ys)`` and unlabeled points ``xu``."""
        stats = SampleStats.from_sample(xs, ys, xu, self.hclass.domain_size)
        return self.decide_stats(stats, marginal)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _check_two_point(labeled):
    if np.shape(labeled)[-2] != 2:
        raise DomainSizeError("learner is defined on the two-point domain only")


class MajorityCountLearner(Learner):
    """Label-discarding rule: label 1 on the point seen more often in the whole sample.

    Ties in the point counts fall back to labeled ERM; a tie there too gives h10.
    """

    name = "majority"
    uses_unlabeled = True
    statistic = "majority"

    def decide(self, labeled, unlabeled, marginal=None):
        labeled = np.asarray(labeled)
        unlabeled = np.asarray(unlabeled)
        _check_two_point(labeled)
        diff = (labeled[..., 0, :].sum(-1) + unlabeled[..., 0]
                - labeled[..., 1, :].sum(-1) - unlabeled[..., 1])
        votes = (labeled[..., 0, 1] + labeled[..., 1, 0]) - (labeled[..., 0, 0] + labeled[..., 1, 1])
        tie_pick = np.where(votes < 0, H01_INDEX, H10_INDEX)
        return np.where(diff > 0, H10_INDEX, np.where(diff < 0, H01_INDEX, tie_pick))


class ERMLearner(Learner):
    """Empirical risk minimizer on the labeled cells; ties go to the lowest hypothesis index."""

    name = "erm"
    statistic = "erm"

    def __init__(self, hclass: HypothesisClass = TWO_POINT_CLASS):
        self.hclass = hclass

    def decide(self, labeled, unlabeled=None, marginal=None):
        labeled = np.asarray(labeled)
        hyps = self.hclass.as_array()                      # (H, k)
        k = labeled.shape[-2]
        if hyps.shape[1] != k:
            raise DomainSizeError("sample domain does not match the hypothesis class")
        xs = np.arange(k)
        wrong = np.stack([labeled[..., xs, 1 - h].sum(-1) for h in hyps], axis=-1)
        return np.argmin(wrong, axis=-1)


class MarginalInformedLearner(Learner):
    """Knows P_X; outputs h10 iff P_X(x1) >= 1/2, ignoring the sample."""

    name = "plugin-marginal"
    uses_marginal = True
    statistic = "sample-free"

    def __init__(self, marginal=None):
        self.marginal = None if marginal is None else np.asarray(marginal, dtype=float)

    def choice(self, marginal=None) -> int:
        m = self.marginal if self.marginal is not None else marginal
        if m is None:
            raise ValueError("plugin-marginal learner needs the true marginal")
        m = np.asarray(m, dtype=float)
        if m.shape != (2,):
            raise DomainSizeError("plugin-marginal learner is defined on the two-point domain only")
        return H10_INDEX if m[0] >= 0.5 else H01_INDEX

    def decide(self, labeled, unlabeled=None, marginal=None):
        batch = np.shape(labeled)[:-2]
        return np.full(batch, self.choice(marginal), dtype=np.int64)


class ConstantLearner(Learner):
    name = "constant"
    statistic = "sample-free"

    def __init__(self, index: int, hclass: HypothesisClass = TWO_POINT_CLASS):
        if not 0 <= index < len(hclass):
            raise ValueError("constant hypothesis index out of range")
        self.index = int(index)
        self.hclass = hclass
        self.name = f"constant:{index}"

    def choice(self, marginal=None) -> int:
        return self.index

    def decide(self, labeled, unlabeled=None, marginal=None):
        return np.full(np.shape(labeled)[:-2], self.index, dtype=np.int64)


class ReducedLearner(Learner):
    """SL learner built from an SSL learner by forgetting the labels of the last ``u_budget`` points.

    Counts do not record positions, so this learner decides on raw samples
    (``fit``) or on an explicit split of the labeled counts (``decide_split``).
    """

    uses_unlabeled = False
    statistic = "reduced"

    def __init__(self, inner: Learner, u_budget: int):
        if u_budget < 0:
            raise ValueError("u_budget must be nonnegative")
        self.inner = inner
        self.u_budget = int(u_budget)
        self.hclass = inner.hclass
        self.uses_marginal = inner.uses_marginal
        self.name = f"reduced:{inner.name}:{u_budget}"

    def decide_split(self, kept, forgotten, marginal=None):
        """``kept``: labeled counts of the first points; ``forgotten``: labeled counts of the last u_budget."""
        return self.inner.decide(kept, np.asarray(forgotten).sum(-1), marginal)

    def decide(self, labeled, unlabeled=None, marginal=None):
        raise TypeError(f"{self.name} depends on sample order; use fit() or decide_split()")

    def fit(self, xs, ys, xu=(), marginal=None) -> int:
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if len(xs) < self.u_budget:
            raise SampleSizeError(f"{self.name} needs at least {self.u_budget} labeled points, got {len(xs)}")
        cut = len(xs) - self.u_budget
        return self.inner.fit(xs[:cut], ys[:cut], xs[cut:], marginal)


class DiscardLearner(Learner):
    """Ignores the last ``k`` labeled points and runs ``inner`` on the rest."""

    statistic = "discard"

    def __init__(self, inner: Learner, k: int):
        if k < 0:
            raise ValueError("k must be nonnegative")
        self.inner = inner
        self.k = int(k)
        self.hclass = inner.hclass
        self.uses_unlabeled = inner.uses_unlabeled
        self.uses_marginal = inner.uses_marginal
        self.name = f"drop:{inner.name}:{k}"

    def decide(self, labeled, unlabeled=None, marginal=None):
        raise TypeError(f"{self.name} depends on sample order; use fit()")

    def fit(self, xs, ys, xu=(), marginal=None) -> int:
        if len(xs) < self.k:
            raise SampleSizeError(f"{self.name} needs at least {self.k} labeled points")
        cut = len(xs) - self.k
        return self.inner.fit(np.asarray(xs)[:cut], np.asarray(ys)[:cut], xu, marginal)


def majority_count_learner() -> MajorityCountLearner:
    return MajorityCountLearner()


def erm_learner(hclass: HypothesisClass = TWO_POINT_CLASS) -> ERMLearner:
    return ERMLearner(hclass)


def marginal_informed_learner(marginal=None) -> MarginalInformedLearner:
    return MarginalInformedLearner(marginal)


def forget_labels_reduction(ssl: Learner, u_budget: int) -> Learner:
    if u_budget == 0:
        return ssl
    return ReducedLearner(ssl, u_budget)


LEARNER_NAMES = ("majority", "erm", "plugin-marginal", "constant:<i>", "reduced:<name>:<u>", "drop:<name>:<k>")


def make_learner(name: str, hclass: HypothesisClass = TWO_POINT_CLASS) -> Learner:
    """Build a learner from its CLI identifier."""
    name = name.strip()
    if name == "majority":
        return MajorityCountLearner()
    if name == "erm":
        return ERMLearner(hclass)
    if name == "plugin-marginal":
        return MarginalInformedLearner()
    head, _, rest = name.partition(":")
    try:
        if head == "constant":
            return ConstantLearner(int(rest), hclass)
        if head in ("reduced", "drop"):
            inner_name, _, count = rest.rpartition(":")
            inner = make_learner(inner_name, hclass)
            if head == "reduced":
                return forget_labels_reduction(inner, int(count))
            return DiscardLearner(inner, int(count))
    except ValueError as exc:
        raise ValueError(f"bad learner name {name!r}: {exc}") from exc
    raise ValueError(f"unknown learner {name!r}; known: {', '.join(LEARNER_NAMES)}")
