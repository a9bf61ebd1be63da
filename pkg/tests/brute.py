"""Brute-force oracles over raw sample sequences, independent of the package's count-based code."""

import itertools
import math

import numpy as np

from ssl_rate_lab.core import class_excess


def _sequences(dist, ell, u):
    k = dist.domain_size
    cells = [(x, y) for x in range(k) for y in (0, 1)]
    for lab in itertools.product(cells, repeat=ell):
        p_lab = math.prod(dist.cells[x, y] for x, y in lab)
        if p_lab == 0:
            continue
        for unl in itertools.product(range(k), repeat=u):
            p = p_lab * math.prod(dist.marginal[x] for x in unl)
            if p:
                yield lab, unl, p


def risk_by_sequences(learner, dist, ell, u):
    """Expected excess risk by running ``learner.fit`` on every raw sample."""
    excess = class_excess(dist, learner.hclass)
    terms = []
    for lab, unl, p in _sequences(dist, ell, u):
        xs = [x for x, _ in lab]
        ys = [y for _, y in lab]
        terms.append(p * excess[learner.fit(xs, ys, list(unl), dist.marginal)])
    return math.fsum(terms)


def sequence_law(dist, ell, u):
    """{sample: probability} over raw (labeled, unlabeled) sequences."""
    return {(lab, unl): p for lab, unl, p in _sequences(dist, ell, u)}


def bayes_error_by_sequences(p0, p1, ell, u):
    """Half the sum over raw samples of min(P0, P1)."""
    law0 = sequence_law(p0, ell, u)
    law1 = sequence_law(p1, ell, u)
    keys = set(law0) | set(law1)
    return 0.5 * math.fsum(min(law0.get(s, 0.0), law1.get(s, 0.0)) for s in keys)


def kl_by_sequences(p0, p1, ell, u):
    law0 = sequence_law(p0, ell, u)
    law1 = sequence_law(p1, ell, u)
    return math.fsum(p * math.log(p / law1[s]) for s, p in law0.items())


def tv_by_sequences(p0, p1, ell, u):
    law0 = sequence_law(p0, ell, u)
    law1 = sequence_law(p1, ell, u)
    keys = set(law0) | set(law1)
    return 0.5 * math.fsum(abs(law0.get(s, 0.0) - law1.get(s, 0.0)) for s in keys)


def random_distribution(rng, k):
    cells = rng.dirichlet(np.ones(2 * k)).reshape(k, 2)
    return cells / cells.sum()
