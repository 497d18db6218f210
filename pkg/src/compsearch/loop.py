"""Two-iteration search: brute-force evaluation, then ranker-pruned evaluation.

Every stage reads what is already in the run directory and appends only what
is missing, so an interrupted run can be resumed by calling the same stage
again.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, dsl
from .baselines import baseline_programs
from .config import LoopConfig
from .datasets import dataset_checksums
from .dsl import HypothesisProgram
from .evaluator import EvalRecord, ProtocolConfig, evaluate_hypothesis
from .generators import (
    GeneratorExhausted,
    GeneratorRequest,
    NotEnoughEntries,
    RawCandidate,
    canonical_text,
    corpus_next,
    llm_next,
    random_next,
)
from .ranker import RankerState, fit, rank_by_score, score_many
from .rewards import NoSuccessfulRuns, RewardSummary, summarize
from .selection import (
    DiversitySelection,
    EfficiencyCurve,
    efficiency_curves,
    greedy_diverse_select,
    oracle_ordering,
    random_baseline_curve,
)
from .store import RunDir, content_id, write_csv
from .validator import validate

log = logging.getLogger(__name__)

EvaluateFn = Callable[[HypothesisProgram, str, Sequence[str], ProtocolConfig, str], list]
GenerateFn = Callable[[GeneratorRequest], list]


@dataclass
class IterationResult:
    hypotheses: list[dict]
    evals: list[EvalRecord]
    rewards: list[RewardSummary]
    evaluated_ids: list[str]
    duplicates: int
    scores: list[dict] = field(default_factory=list)


def run_id_for(config: LoopConfig) -> str:
    return content_id(json.dumps(config.to_json(), sort_keys=True))


class Pipeline:
    def __init__(self, config: LoopConfig, run_dir: Path | str, *, evaluate_fn: EvaluateFn | None = None,
                 generate_fn: GenerateFn | None = None, jobs: int = 1):
        self.config = config
        self.run = RunDir(run_dir)
        self.jobs = jobs
        self._evaluate_fn = evaluate_fn
        self._generate_fn = generate_fn
        self.run_id = run_id_for(config)

    # -- setup -----------------------------------------------------------------

    def start(self) -> dict:
        return self.run.start_manifest(self.run_id, self.config.to_json(), self.config.seed,
                                       dataset_checksums(), __version__)

    @property
    def kind(self):
        return self.config.component_kind

    def _evaluate(self, program: HypothesisProgram, hypothesis_id: str) -> list[EvalRecord]:
        if self._evaluate_fn is not None:
            return list(self._evaluate_fn(program, self.kind.value, self.config.tasks, self.config.protocol,
                                          hypothesis_id))
        return evaluate_hypothesis(program, self.kind, self.config.tasks, self.config.protocol,
                                   hypothesis_id=hypothesis_id, jobs=self.jobs)

    def _generate(self, request: GeneratorRequest) -> list[RawCandidate]:
        if self._generate_fn is not None:
            return list(self._generate_fn(request))
        source = self.config.source
        if source == "corpus":
            try:
                return corpus_next(self.config.corpus, request)
            except NotEnoughEntries as exc:
                raise GeneratorExhausted(str(exc)) from None
        if source == "random":
            return random_next(request)
        return llm_next(self.config.endpoint, request)

    # -- baselines ---------------------------------------------------------------

    def baseline_programs(self) -> dict[str, HypothesisProgram]:
        return baseline_programs(self.config.baseline_set)

    def ensure_baselines(self) -> list[EvalRecord]:
        programs = self.baseline_programs()
        known = {r["id"] for r in self.run.load("baselines")}
        self.run.append("baselines", [
            {"id": bid, "name": p.name, "kind": p.kind.value, "canonical_text": dsl.serialize(p),
             "baseline_set": self.config.baseline_set}
            for bid, p in programs.items() if bid not in known
        ])
        for bid, program in programs.items():
            self._evaluate_missing(bid, program)
        return self.eval_records(programs)

    # -- stores --------------------------------------------------------------------

    def eval_records(self, ids=None) -> list[EvalRecord]:
        records = [EvalRecord.from_json(r) for r in self.run.load("evals")]
        if ids is not None:
            ids = set(ids)
            records = [r for r in records if r.hypothesis_id in ids]
        return records

    def hypothesis_records(self, iteration: int | None = None) -> list[dict]:
        records = self.run.load("hypotheses").records
        if iteration is not None:
            records = [r for r in records if r.get("iteration") == iteration]
        return sorted(records, key=lambda r: (r["iteration"], r["index"]))

    def reward_summaries(self) -> dict[str, RewardSummary]:
        return {r["hypothesis_id"]: RewardSummary.from_json(r) for r in self.run.load("rewards")}

    def program(self, record: dict) -> HypothesisProgram:
        return dsl.parse(record["canonical_text"])

    # -- generation and validation -----------------------------------------------

    def generate(self, iteration: int, count: int, start: int) -> list[dict]:
        existing = {(r["iteration"], r["index"]): r for r in self.run.load("candidates")}
        wanted = [(iteration, i) for i in range(start, start + count)]
        if any(key not in existing for key in wanted):
            request = GeneratorRequest(self.kind, self.config.prompt_style, count, self.config.seed, start)
            fresh = self._generate(request)
            # raw texts are persisted before anything looks at them
            self.run.append("candidates", [
                {"iteration": iteration, "index": c.index, "source": c.source, "prompt_style": c.prompt_style,
                 "raw_text": c.text, "model": c.model, "metadata": c.metadata}
                for c in fresh if (iteration, c.index) not in existing
            ])
            existing = {(r["iteration"], r["index"]): r for r in self.run.load("candidates")}
        return [existing[key] for key in wanted]

    def validate_candidates(self, candidates: list[dict]) -> list[dict]:
        """Validate and deduplicate; returns hypothesis records in generation order."""
        done = {(r["iteration"], r["index"]): r for r in self.run.load("hypotheses")}
        seen = {r["canonical_text"] for r in done.values() if r.get("canonical_text") and not r["duplicate"]}
        out = []
        for cand in sorted(candidates, key=lambda c: (c["iteration"], c["index"])):
            key = (cand["iteration"], cand["index"])
            if key in done:
                out.append(done[key])
                continue
            text = cand["raw_text"]
            canonical = canonical_text(text)
            report = validate(text, self.kind)
            duplicate = canonical is not None and canonical in seen
            if canonical is not None and report.passed and not duplicate:
                seen.add(canonical)
            record = {
                "id": content_id(canonical if canonical is not None else text),
                "kind": self.kind.value,
                "prompt_style": cand["prompt_style"],
                "source": cand["source"],
                "raw_text": text,
                "canonical_text": canonical,
                "validator_report": report.to_json(),
                "iteration": cand["iteration"],
                "index": cand["index"],
                "duplicate": duplicate,
            }
            self.run.append("hypotheses", [record])
            done[key] = record
            out.append(record)
        return out

    @staticmethod
    def evaluable(records: list[dict]) -> list[dict]:
        return [r for r in records if r["validator_report"]["passed"] and not r["duplicate"]]

    # -- evaluation and rewards -----------------------------------------------------

    def _evaluate_missing(self, hypothesis_id: str, program: HypothesisProgram) -> None:
        have = {(r.task, r.run_index) for r in self.eval_records([hypothesis_id])}
        need = {(t, i) for t in self.config.tasks for i in range(1, self.config.runs + 1)}
        if need <= have:
            return
        records = self._evaluate(program, hypothesis_id)
        self.run.append("evals", [r.to_json() for r in records if (r.task, r.run_index) not in have])

    def evaluate(self, records: list[dict]) -> list[EvalRecord]:
        for record in records:
            self._evaluate_missing(record["id"], self.program(record))
        return self.eval_records([r["id"] for r in records])

    def reward(self, ids: Sequence[str]) -> list[RewardSummary]:
        known = self.reward_summaries()
        baseline_ids = set(self.baseline_programs())
        baseline_records = self.eval_records(baseline_ids)
        all_records = self.eval_records(ids)
        fresh = []
        for hid in sorted(set(ids)):
            if hid in known:
                continue
            try:
                summary = summarize(hid, [r for r in all_records if r.hypothesis_id == hid], baseline_records,
                                    self.config.pooling)
            except NoSuccessfulRuns as exc:
                log.info("no reward for %s: %s", hid, exc)
                continue
            fresh.append(summary)
            known[hid] = summary
        self.run.append("rewards", [s.to_json() for s in fresh])
        return [known[h] for h in sorted(set(ids)) if h in known]

    # -- iterations -------------------------------------------------------------------

    def run_iteration1(self) -> IterationResult:
        self.start()
        self.ensure_baselines()
        if self.config.batch_size == 0:
            return IterationResult([], [], [], [], 0)
        candidates = self.generate(1, self.config.batch_size, 0)
        hypotheses = self.validate_candidates(candidates)
        todo = self.evaluable(hypotheses)
        evals = self.evaluate(todo)
        rewards = self.reward([r["id"] for r in todo])
        self.run.complete_stage("iteration1")
        return IterationResult(hypotheses, evals, rewards, [r["id"] for r in todo],
                               sum(r["duplicate"] for r in hypotheses))

    def run_iteration2(self, state: RankerState, count: int | None = None, k: int | None = None) -> IterationResult:
        self.start()
        self.ensure_baselines()
        count = self.config.iteration2_batch if count is None else count
        k = self.config.top_k if k is None else k
        if count == 0:
            return IterationResult([], [], [], [], 0)
        candidates = self.generate(2, count, self.config.batch_size)
        hypotheses = self.validate_candidates(candidates)
        pool = self.evaluable(hypotheses)
        scores = self.score(state, pool, iteration=2)
        chosen = rank_by_score([(s["hypothesis_id"], s["score"]) for s in scores])[:k]
        chosen_set = set(chosen)
        todo = [r for r in pool if r["id"] in chosen_set]
        evals = self.evaluate(todo)
        rewards = self.reward(chosen)
        self.run.complete_stage("iteration2")
        return IterationResult(hypotheses, evals, rewards, chosen, sum(r["duplicate"] for r in hypotheses), scores)

    # -- ranker -----------------------------------------------------------------------

    def features(self, records: list[dict]) -> np.ndarray:
        return np.array([dsl.featurize(self.program(r)) for r in records]).reshape(len(records), -1)

    def rewarded_records(self) -> list[dict]:
        rewards = self.reward_summaries()
        return [r for r in self.evaluable(self.hypothesis_records()) if r["id"] in rewards]

    def train_ranker(self) -> RankerState:
        records = self.rewarded_records()
        rewards = self.reward_summaries()
        state = fit(self.features(records), [rewards[r["id"]].reward for r in records], self.config.ranker,
                    self.config.seed)
        path = self.run.root / f"ranker_{state.ranker_id}.json"
        if not path.exists():
            self.run.root.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(state.to_json(), sort_keys=True, indent=1) + "\n")
        return state

    def load_ranker(self, ranker: str | Path | None = None) -> RankerState:
        if ranker is None:
            paths = sorted(self.run.root.glob("ranker_*.json"))
            if not paths:
                raise FileNotFoundError(f"no trained ranker in {self.run.root}")
            if len(paths) > 1:
                raise ValueError("several rankers in the run directory; pass one explicitly")
            path = paths[0]
        else:
            path = Path(ranker)
            if not path.exists():
                path = self.run.root / f"ranker_{ranker}.json"
        return RankerState.from_json(json.loads(Path(path).read_text()))

    def score(self, state: RankerState, records: list[dict], iteration: int | None = None) -> list[dict]:
        rid = state.ranker_id
        known = {(s["hypothesis_id"], s["ranker_id"]): s for s in self.run.load("scores")}
        todo = [r for r in records if (r["id"], rid) not in known]
        if todo:
            values = score_many(state, self.features(todo))
            fresh = [{"hypothesis_id": r["id"], "ranker_id": rid, "score": float(v),
                      "iteration": r["iteration"] if iteration is None else iteration}
                     for r, v in zip(todo, values)]
            self.run.append("scores", fresh)
            known.update({(s["hypothesis_id"], rid): s for s in fresh})
        return [known[(r["id"], rid)] for r in records]

    # -- analysis ------------------------------------------------------------------------

    def efficiency(self, state: RankerState) -> dict[str, EfficiencyCurve]:
        rewards = {hid: s.reward for hid, s in self.reward_summaries().items()}
        records = [r for r in self.rewarded_records()]
        scores = self.score(state, records)
        rewards = {s["hypothesis_id"]: rewards[s["hypothesis_id"]] for s in scores}
        orderings = {
            "ranker": rank_by_score([(s["hypothesis_id"], s["score"]) for s in scores]),
            "oracle": oracle_ordering(rewards),
        }
        curves = efficiency_curves(orderings, rewards, self.config.window, self.config.efficiency_aggregate)
        curves["random"] = random_baseline_curve(rewards, self.config.window, self.config.random_shuffles,
                                                 self.config.seed, self.config.efficiency_aggregate)
        for name, curve in curves.items():
            write_csv(self.run.root / f"efficiency_{name}.csv", ["t", "y"], curve.rows())
        write_csv(self.run.root / "efficiency_auc.csv", ["ordering", "auc"],
                  [(name, curves[name].auc) for name in sorted(curves)])
        return curves

    def select_diverse(self, k: int | None = None, alpha: float | None = None) -> DiversitySelection:
        k = self.config.diversity_k if k is None else k
        alpha = self.config.alpha if alpha is None else alpha
        rewards = self.reward_summaries()
        records = self.rewarded_records()
        feats = self.features(records)
        selection = greedy_diverse_select(
            [(r["id"], rewards[r["id"]].reward, f) for r, f in zip(records, feats)], k, alpha, self.config.n_score)
        self.run.root.mkdir(parents=True, exist_ok=True)
        (self.run.root / "selection.json").write_text(json.dumps({
            "alpha": alpha,
            "k": k,
            "selected": selection.selected,
            "n_score": selection.n_score,
            "n_score_definition": f"{self.config.n_score} cosine distance to the other selected items",
            "rule": "greedy: alpha * minmax(reward) + (1 - alpha) * min cosine distance to selected / 2",
        }, indent=2, sort_keys=True) + "\n")
        write_csv(self.run.root / f"similarity_{self.run_id}.csv", ["id", *selection.selected],
                  [[sid, *row.tolist()] for sid, row in zip(selection.selected, selection.similarity)])
        return selection

    def loop(self) -> dict:
        """Iteration 1, ranker training, optional iteration 2, efficiency, selection and report."""
        from .report import build_report, write_report

        out: dict = {}
        it1 = self.run_iteration1()
        out["iteration1"] = it1
        rewards = [s.reward for s in self.reward_summaries().values()]
        if len(set(rewards)) >= 2:
            state = self.train_ranker()
            out["ranker"] = state
            self.run.complete_stage("train-ranker")
            if self.config.iteration2_batch:
                out["iteration2"] = self.run_iteration2(state)
            out["efficiency"] = self.efficiency(state)
            self.run.complete_stage("efficiency")
        else:
            log.warning("fewer than two distinct rewards; skipping ranker, iteration 2 and efficiency")
        if self.reward_summaries():
            out["selection"] = self.select_diverse()
            self.run.complete_stage("select-diverse")
            out["report"] = build_report(self.run.root)
            write_report(self.run.root, out["report"])
            self.run.complete_stage("report")
        return out
