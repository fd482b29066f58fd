"""Scoring and evaluation: threshold-sweep DET curves, EER, AUC, the
vowel-group confusable metric (mean over groups of the within-group average
AUC), and easy/hard pair AUCs.

Conventions: a trial is accepted when its score >= threshold; the sweep runs
0.00..1.00 in steps of 0.01 (101 points), so cosine scores below zero are
never accepted. All rates are fractions internally; the percent rendering
(x100, 3 decimals) happens only in the ``.pct.json`` report mirror.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import EvalPair, EvalSplit
from .errors import DataError
from .ge2e import centroid

logger = logging.getLogger(__name__)

N_THRESHOLDS = 101
THRESHOLDS = np.linspace(0.0, 1.0, N_THRESHOLDS)


@dataclass
class ScoreSet:
    positives: np.ndarray
    negatives: np.ndarray

    def __post_init__(self) -> None:
        self.positives = np.asarray(self.positives, dtype=np.float64)
        self.negatives = np.asarray(self.negatives, dtype=np.float64)
        for name, arr in (("positives", self.positives), ("negatives", self.negatives)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise DataError(f"{name} contain non-finite scores")


@dataclass
class DetCurve:
    """(threshold, FAR, FRR) triples; FAR is non-increasing and FRR
    non-decreasing in the threshold by construction."""

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.far.tolist(), self.frr.tolist()))


def det_curve(s: ScoreSet) -> DetCurve:
    """DET curve over the fixed 101-threshold sweep.

    FAR(t) = fraction of negatives >= t, FRR(t) = fraction of positives < t.
    """
    if s.positives.size == 0 or s.negatives.size == 0:
        raise DataError("need at least one positive and one negative score")
    pos = np.sort(s.positives)
    neg = np.sort(s.negatives)
    far = 1.0 - np.searchsorted(neg, THRESHOLDS, side="left") / neg.size
    frr = np.searchsorted(pos, THRESHOLDS, side="left") / pos.size
    return DetCurve(THRESHOLDS.copy(), far, frr)


def eer(c: DetCurve) -> float:
    """Equal error rate from the swept curve.

    Exact grid equality wins; otherwise the two curves are linearly
    interpolated between the adjacent thresholds bracketing the FAR-FRR sign
    change. If they never cross, returns the FAR at the threshold minimizing
    |FAR - FRR|.
    """
    far, frr = c.far, c.frr
    diff = far - frr
    for i in range(len(diff)):
        if diff[i] == 0.0:
            return float(far[i])
    for i in range(len(diff) - 1):
        if diff[i] * diff[i + 1] < 0.0:
            denom = (far[i + 1] - far[i]) - (frr[i + 1] - frr[i])
            alpha = (frr[i] - far[i]) / denom
            return float(far[i] + alpha * (far[i + 1] - far[i]))
    i = int(np.argmin(np.abs(diff)))
    return float(far[i])


def auc(c: DetCurve) -> float:
    """Area under the DET curve: FRR integrated over FAR across [0, 1], the
    curve extended horizontally to both boundaries. Smaller is better."""
    order = np.argsort(c.far, kind="stable")
    f = c.far[order]
    r = c.frr[order]
    if f[0] > 0.0:
        f = np.concatenate(([0.0], f))
        r = np.concatenate(([r[0]], r))
    if f[-1] < 1.0:
        f = np.concatenate((f, [1.0]))
        r = np.concatenate((r, [r[-1]]))
    return float(np.trapezoid(r, f))


@dataclass
class MetricsReport:
    """Per-keyword EER/AUC, their macro averages, per-group AUCs, the group
    mean (c_auc), and optional pair AUCs. Rates are fractions."""

    per_keyword: dict[str, dict[str, float]] = field(default_factory=dict)
    overall: dict[str, float] = field(default_factory=dict)
    groups: dict[str, float] = field(default_factory=dict)
    c_auc: float | None = None
    easy_auc: float | None = None
    hard_auc: float | None = None

    def validate(self) -> None:
        if self.groups and self.c_auc is not None:
            mean = sum(self.groups.values()) / len(self.groups)
            if not math.isclose(mean, self.c_auc, rel_tol=0, abs_tol=1e-12):
                raise DataError("c_auc does not equal the mean of group AUCs")

    def to_dict(self) -> dict:
        return {
            "per_keyword": {k: dict(v) for k, v in sorted(self.per_keyword.items())},
            "overall": dict(self.overall),
            "groups": dict(sorted(self.groups.items())),
            "c_auc": self.c_auc,
            "easy_auc": self.easy_auc,
            "hard_auc": self.hard_auc,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            per_keyword=d.get("per_keyword", {}),
            overall=d.get("overall", {}),
            groups=d.get("groups", {}),
            c_auc=d.get("c_auc"),
            easy_auc=d.get("easy_auc"),
            hard_auc=d.get("hard_auc"),
        )


class SplitScorer:
    """Embeds every enrollment/test utterance of a split once, then serves
    centroid-vs-test cosine ScoreSets for arbitrary keyword pools."""

    def __init__(self, embed, features, split: EvalSplit):
        self.split = split
        self.embeddings: dict[str, np.ndarray] = {}
        self.centroids: dict[str, np.ndarray] = {}
        for kw in split.keywords():
            for utt_id in split.enroll[kw] + split.test[kw]:
                if utt_id not in self.embeddings:
                    self.embeddings[utt_id] = embed(features(utt_id))
            self.centroids[kw] = centroid([self.embeddings[i] for i in split.enroll[kw]])

    def score_keyword(self, keyword: str, pool: list[str]) -> ScoreSet:
        """Positives: the keyword's centroid against its own test utterances;
        negatives: the centroid against test utterances of the other pool
        keywords."""
        if keyword not in self.centroids:
            raise DataError(f"keyword {keyword!r} not in split")
        cent = self.centroids[keyword]
        positives = [float(cent @ self.embeddings[i]) for i in self.split.test[keyword]]
        negatives = [
            float(cent @ self.embeddings[i])
            for kw in pool
            if kw != keyword and kw in self.centroids
            for i in self.split.test[kw]
        ]
        if not negatives:
            raise DataError(f"empty test pool for keyword {keyword!r}")
        return ScoreSet(np.array(positives), np.array(negatives))

    def pooled_scores(self, pool: list[str] | None = None) -> ScoreSet:
        """Concatenated positives/negatives over every keyword in the pool."""
        pool = pool if pool is not None else self.split.keywords()
        pos, neg = [], []
        for kw in pool:
            s = self.score_keyword(kw, pool)
            pos.append(s.positives)
            neg.append(s.negatives)
        return ScoreSet(np.concatenate(pos), np.concatenate(neg))


def keyword_metrics(scorer: SplitScorer, pool: list[str] | None = None) -> dict[str, dict[str, float]]:
    pool = pool if pool is not None else scorer.split.keywords()
    out: dict[str, dict[str, float]] = {}
    for kw in pool:
        curve = det_curve(scorer.score_keyword(kw, pool))
        out[kw] = {"eer": eer(curve), "auc": auc(curve)}
    return out


def c_auc(scorer: SplitScorer, groups) -> tuple[dict[str, float], float]:
    """Per-group AUC (mean over member keywords scored only inside their
    group) and the overall group mean. Groups with fewer than two member
    keywords in the split are skipped with a warning."""
    group_aucs: dict[str, float] = {}
    for g in groups:
        present = [w for w in g.members if w in scorer.centroids]
        if len(present) < 2:
            logger.warning("group %s skipped: %d keyword(s) in split", g.label, len(present))
            continue
        member_aucs = [auc(det_curve(scorer.score_keyword(kw, present))) for kw in present]
        group_aucs[g.label] = float(np.mean(member_aucs))
    if not group_aucs:
        raise DataError("every vowel group was skipped; cannot compute the group metric")
    return group_aucs, float(np.mean(list(group_aucs.values())))


def evaluate_split(
    embed,
    features,
    split: EvalSplit,
    groups=None,
    aggregate: str = "macro",
) -> tuple[MetricsReport, SplitScorer]:
    """Full evaluation of a split: per-keyword metrics against the whole
    keyword pool, overall aggregates (macro mean by default, pooled scores
    behind the flag), and the group metric when groups are given."""
    if aggregate not in ("macro", "pooled"):
        raise ValueError(f"aggregate must be 'macro' or 'pooled', got {aggregate!r}")
    scorer = SplitScorer(embed, features, split)
    report = MetricsReport()
    report.per_keyword = keyword_metrics(scorer)
    if aggregate == "macro":
        report.overall = {
            "eer": float(np.mean([m["eer"] for m in report.per_keyword.values()])),
            "auc": float(np.mean([m["auc"] for m in report.per_keyword.values()])),
        }
    else:
        curve = det_curve(scorer.pooled_scores())
        report.overall = {"eer": eer(curve), "auc": auc(curve)}
    if groups:
        report.groups, report.c_auc = c_auc(scorer, groups)
    return report, scorer


def pair_auc(embed, features, pairs: list[EvalPair]) -> tuple[float | None, float | None]:
    """(easy_auc, hard_auc) from cosine scores of utterance pairs; a class
    with no pairs reports None for its AUC."""
    cache: dict[str, np.ndarray] = {}

    def emb(utt_id: str) -> np.ndarray:
        if utt_id not in cache:
            cache[utt_id] = embed(features(utt_id))
        return cache[utt_id]

    scores: dict[str, list[float]] = {"positive": [], "easy_negative": [], "hard_negative": []}
    for p in pairs:
        scores[p.label].append(float(emb(p.a) @ emb(p.b)))
    if not scores["positive"]:
        raise DataError("no positive pairs; cannot compute pair AUCs")

    def side(neg_label: str) -> float | None:
        if not scores[neg_label]:
            return None
        curve = det_curve(ScoreSet(np.array(scores["positive"]), np.array(scores[neg_label])))
        return auc(curve)

    return side("easy_negative"), side("hard_negative")


def export_det(c: DetCurve, path: str | Path) -> None:
    """CSV with header ``threshold,far,frr`` and one row per sweep point."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "far", "frr"])
        for t, fa, fr in c.points():
            writer.writerow([f"{t:.2f}", repr(fa), repr(fr)])


def load_det(path: str | Path) -> DetCurve:
    thresholds, far, frr = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            thresholds.append(float(row["threshold"]))
            far.append(float(row["far"]))
            frr.append(float(row["frr"]))
    return DetCurve(np.array(thresholds), np.array(far), np.array(frr))


def _pct(value):
    return None if value is None else round(value * 100.0, 3)


def write_report(r: MetricsReport, path: str | Path) -> None:
    """Write the fraction-valued report to ``path`` and a percent mirror
    (values x100, 3 decimals) to ``<stem>.pct.json``. Serialization is
    deterministic: sorted keys, fixed float repr."""
    r.validate()
    path = Path(path)
    payload = r.to_dict()
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    pct = {
        "per_keyword": {
            k: {m: _pct(v) for m, v in row.items()} for k, row in payload["per_keyword"].items()
        },
        "overall": {m: _pct(v) for m, v in payload["overall"].items()},
        "groups": {k: _pct(v) for k, v in payload["groups"].items()},
        "c_auc": _pct(payload["c_auc"]),
        "easy_auc": _pct(payload["easy_auc"]),
        "hard_auc": _pct(payload["hard_auc"]),
    }
    pct_path = path.with_suffix(".pct.json") if path.suffix == ".json" else Path(str(path) + ".pct.json")
    pct_path.write_text(json.dumps(pct, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_report(path: str | Path) -> MetricsReport:
    try:
        return MetricsReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (json.JSONDecodeError, TypeError) as exc:
        raise DataError(f"bad report file {path}: {exc}") from exc
