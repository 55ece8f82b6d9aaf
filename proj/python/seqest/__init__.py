"""Multistage sampling plans for binomial parameters and bounded means."""

import json

from ._core import (  # noqa: F401
    DataError,
    DocumentError,
    Plan,
    Session,
    Spec,
    SpecError,
    build_plan,
    ch_bounds,
    coverage,
    cp_bounds,
    g_fn,
    kl_bernoulli,
    kl_inverse_binomial,
    link_transform,
    m_fn,
    m_inv,
    massart_bounds,
    plan_from_document,
    stop_distribution,
    with_stages,
)
from . import _core


def plan(scheme, **params):
    return build_plan(Spec(scheme, **params))


def certify(plan, jobs=1, method="grid"):
    return json.loads(_core.certify_document(plan, jobs, method))


def simulate(spec, truth, reps, seed, jobs=1, link=False, compare_exact=False, budget=None):
    return json.loads(_core.simulate_document(spec, truth, reps, seed, jobs, link, compare_exact, budget))


def estimate(plan, samples, budget=None):
    s = Session(plan, budget)
    for x in samples:
        if s.feed(float(x)) != "running":
            break
    if s.status == "running":
        raise DataError("samples ran out before the rule stopped")
    return json.loads(s.report_document())
