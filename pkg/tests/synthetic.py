"""A fast stand-in evaluator whose losses follow a fixed linear function of program features."""

import numpy as np
from scipy.stats import norm

from compsearch import dsl, validator
from compsearch.baselines import baseline_programs
from compsearch.evaluator import STATUS_OK, STATUS_REJECTED, EvalRecord, run_seed
from compsearch.generators import RawCandidate, random_program


def reference_stats(kind="activation", n=400, seed=12345):
    feats = np.array([dsl.featurize(p) for p in valid_programs(kind, n, seed)])
    std = feats.std(axis=0)
    return feats.mean(axis=0), np.where(std > 0, std, 1.0)


def valid_programs(kind, n, seed, start=0):
    out, i = [], start
    while len(out) < n:
        p = random_program(np.random.default_rng([seed, i]), kind, name=f"s-{seed}-{i}")
        if validator.validate(dsl.serialize(p), kind).passed:
            out.append(p)
        i += 1
    return out


class SyntheticEvaluator:
    """loss(h, task, run) = -latent(h) + N(0, noise); baselines sit on fixed normal quantiles."""

    def __init__(self, kind="activation", noise=0.05, seed=0, baseline_set=None):
        rng = np.random.default_rng(seed)
        self.mean, self.std = reference_stats(kind)
        self.w = rng.normal(size=self.mean.size) / np.sqrt(self.mean.size)
        self.noise = noise
        self.baselines = sorted(baseline_programs(baseline_set or f"{kind}-default"))

    def latent(self, program):
        return float(((dsl.featurize(program) - self.mean) / self.std) @ self.w)

    def __call__(self, program, kind, tasks, protocol, hypothesis_id):
        jobs = [(t, i) for t in sorted(set(tasks)) for i in range(1, protocol.runs + 1)]
        if hypothesis_id in self.baselines:
            j = self.baselines.index(hypothesis_id)
            n = len(self.baselines) * protocol.runs
            return [EvalRecord(hypothesis_id, t, i, run_seed(hypothesis_id, t, i), STATUS_OK,
                               float(norm.ppf((j * protocol.runs + i - 0.5) / n)))
                    for t, i in jobs]
        if not validator.validate(dsl.serialize(program), kind).passed:
            return [EvalRecord(hypothesis_id, t, i, run_seed(hypothesis_id, t, i), STATUS_REJECTED)
                    for t, i in jobs]
        base = -self.latent(program)
        out = []
        for t, i in jobs:
            seed = run_seed(hypothesis_id, t, i)
            noise = np.random.default_rng(seed).normal(0.0, self.noise)
            out.append(EvalRecord(hypothesis_id, t, i, seed, STATUS_OK, base + float(noise)))
        return out


def valid_random_source(kind="activation"):
    """A generator function emitting only programs that pass validation (index i depends on (seed, i))."""

    def generate(request):
        out = []
        for i in range(request.start, request.start + request.count):
            p = valid_programs(kind, 1, request.seed, start=1000 * i)[0]
            out.append(RawCandidate(dsl.serialize(p), f"valid-random:{request.seed}", request.style, i))
        return out

    return generate
