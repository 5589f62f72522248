"""File-based end-to-end pipeline with a hash manifest for stage caching.

Every stage reads its inputs from the work directory and writes its outputs
there. The manifest stores, per stage, a digest of the stage configuration
and input bytes plus digests of the outputs; a stage is skipped when both
still match.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

from .analysis import cluster_delta, knn_similarity, nmf, recommend, restrict_and_rerun, ridge_fit, \
    silhouette_sweep, spectral_clustering, tsne
from .analysis.io import attribution_json, format_clustering, format_coordinates, format_topics, parse_clustering, \
    parse_table, report_json
from .core import SecondaryStructure, Sequence, ValidationError
from .energy import EnergyParameters, Thermo, dump_parameters, load_parameters
from .fingerprint import FACE, NEIGHBORHOOD, FeatureDictionary, FeatureMatrix, expected_counts, \
    fingerprint_from_counts, kmer_counts, kmer_dictionary, stack_segments
from .folding import EnsembleDistribution, boltzmann_ensemble
from .selex import build_profiles, format_profiles, parse_profiles, parse_reads

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
MIN_KEPT_ROWS = 3


def bundled_reads() -> Path:
    return Path(str(resources.files("boltzfold") / "data" / "synthetic_reads.tsv"))


@dataclass
class PipelineConfig:
    reads: str = ""
    params: str | None = None
    workdir: str = "boltzfold_run"
    temperature_kelvin: float = 310.15
    boltzmann_constant: float = 1.98e-3
    k: int = 4
    radius: int = 4
    n_samples: int = 1000
    ensemble_mode: str = "sampled"
    exhaustive_limit: int = 30
    topics: int = 25
    sweep_min: int = 5
    sweep_max: int = 50
    restricted_topics: int = 25
    restricted_clusters: int = 25
    k_neighbors: int = 10
    ridge_lambda: float = 1.0
    top_m: int = 10
    count_percentile: float = 90
    pressure_percentile: float = 10
    perplexity: float = 30.0
    tsne_iters: int = 1000
    nmf_iters: int = 500
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        for name in ("k", "radius", "n_samples", "exhaustive_limit", "topics", "sweep_min", "sweep_max",
                     "restricted_topics", "restricted_clusters", "k_neighbors", "tsne_iters", "nmf_iters", "jobs"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be positive")
        if self.ensemble_mode not in ("sampled", "exhaustive"):
            raise ValidationError(f"unknown ensemble mode {self.ensemble_mode!r}")
        if self.ridge_lambda < 0:
            raise ValidationError("ridge lambda must be nonnegative")
        if self.perplexity <= 0:
            raise ValidationError("perplexity must be positive")

    @property
    def thermo(self) -> Thermo:
        return Thermo(self.temperature_kelvin, self.boltzmann_constant)


def stage_seed(master: int, stage: str) -> int:
    digest = hashlib.sha256(f"{master}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class Stage:
    name: str
    inputs: list[str]
    outputs: list[str]
    run: Callable[[], dict[str, str]]
    settings: dict = field(default_factory=dict)


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.root = Path(config.workdir)
        self.params: EnergyParameters = load_parameters(config.params)
        self.ran: list[str] = []
        self.skipped: list[str] = []

    # --- io helpers -----------------------------------------------------------

    def path(self, rel: str) -> Path:
        return self.root / rel

    def read(self, rel: str) -> str:
        return self.path(rel).read_text()

    def _manifest(self) -> dict:
        p = self.path(MANIFEST)
        if p.exists():
            try:
                return json.loads(p.read_text())
            except json.JSONDecodeError:
                return {}
        return {}

    def _key(self, stage: Stage) -> str:
        h = hashlib.sha256()
        h.update(json.dumps({"stage": stage.name, "settings": stage.settings}, sort_keys=True).encode())
        for rel in stage.inputs:
            h.update(rel.encode())
            h.update(self.path(rel).read_bytes())
        return h.hexdigest()

    def _execute(self, stage: Stage, manifest: dict) -> None:
        key = self._key(stage)
        record = manifest.get(stage.name)
        if record and record.get("key") == key and all(
                self.path(o).exists() and _sha(self.path(o).read_bytes()) == record["outputs"].get(o)
                for o in stage.outputs):
            self.skipped.append(stage.name)
            log.info("stage %s: cached", stage.name)
            return
        log.info("stage %s: running", stage.name)
        produced = stage.run()
        digests = {}
        for rel in stage.outputs:
            p = self.path(rel)
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(produced[rel])
            digests[rel] = _sha(p.read_bytes())
        manifest[stage.name] = {"key": key, "outputs": digests}
        self.path(MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
        self.ran.append(stage.name)

    # --- stages ---------------------------------------------------------------

    def stages(self) -> list[Stage]:
        c = self.config
        common = {"seed": c.seed}
        return [
            Stage("ingest", ["inputs/reads.tsv"], ["profiles.tsv"], self.stage_ingest,
                  {"count_percentile": c.count_percentile, "pressure_percentile": c.pressure_percentile}),
            Stage("ensembles", ["profiles.tsv", "inputs/params.tsv"], ["ensembles.tsv"], self.stage_ensembles,
                  dict(common, mode=c.ensemble_mode, n=c.n_samples, limit=c.exhaustive_limit,
                       T=c.temperature_kelvin, kB=c.boltzmann_constant)),
            Stage("embed", ["profiles.tsv", "ensembles.tsv", "inputs/params.tsv"], ["ebof.tsv", "en.tsv"],
                  self.stage_embed, {"k": c.k, "radius": c.radius}),
            Stage("topics", ["ebof.tsv", "en.tsv"],
                  ["topics/ebof_M.tsv", "topics/ebof_H.tsv", "topics/en_M.tsv", "topics/en_H.tsv"],
                  self.stage_topics, dict(common, topics=c.topics, iters=c.nmf_iters)),
            Stage("cluster", ["topics/ebof_M.tsv", "topics/en_M.tsv"],
                  ["clusters/ebof.tsv", "clusters/en.tsv", "clusters/sweep.tsv"], self.stage_cluster,
                  dict(common, lo=c.sweep_min, hi=c.sweep_max, knn=c.k_neighbors)),
            Stage("attribute", ["ebof.tsv", "profiles.tsv"], ["attribution.json"], self.stage_attribute,
                  {"lambda": c.ridge_lambda}),
            Stage("anomalies", ["ebof.tsv", "profiles.tsv", "attribution.json", "clusters/ebof.tsv"], ["anomalies.json"],
                  self.stage_anomalies, {"top_m": c.top_m, "lambda": c.ridge_lambda}),
            Stage("recommend", ["ebof.tsv", "profiles.tsv", "attribution.json", "clusters/ebof.tsv",
                                "anomalies.json"],
                  ["topics/w_neg_M.tsv", "topics/w_pos_M.tsv", "clusters/w_neg.tsv", "clusters/w_pos.tsv",
                   "recommendations.json"], self.stage_recommend,
                  dict(common, topics=c.restricted_topics, clusters=c.restricted_clusters, knn=c.k_neighbors,
                       **{"lambda": c.ridge_lambda})),
            Stage("tsne", ["topics/ebof_M.tsv"], ["tsne.tsv"], self.stage_tsne,
                  dict(common, perplexity=c.perplexity, iters=c.tsne_iters)),
            Stage("figures", ["tsne.tsv", "clusters/ebof.tsv", "profiles.tsv", "anomalies.json",
                              "recommendations.json"],
                  ["figures/tsne_clusters.svg", "figures/selex_scatter.svg"], self.stage_figures),
        ]

    def run(self) -> None:
        c = self.config
        reads = Path(c.reads) if c.reads else bundled_reads()
        if not reads.is_file():
            raise FileNotFoundError(f"reads file not found: {reads}")
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_if_changed("inputs/reads.tsv", reads.read_text())
        self._write_if_changed("inputs/params.tsv", dump_parameters(self.params))
        manifest = self._manifest()
        for stage in self.stages():
            try:
                self._execute(stage, manifest)
            except Exception as exc:
                raise StageError(stage.name, exc) from exc

    def _write_if_changed(self, rel: str, text: str) -> None:
        p = self.path(rel)
        p.parent.mkdir(parents=True, exist_ok=True)
        if not p.exists() or p.read_text() != text:
            p.write_text(text)

    def _profiles(self):
        return parse_profiles(self.read("profiles.tsv"))

    def stage_ingest(self) -> dict[str, str]:
        c = self.config
        records = parse_reads(self.path("inputs/reads.tsv"))
        profiles = build_profiles(records, c.count_percentile, c.pressure_percentile)
        return {"profiles.tsv": format_profiles(profiles)}

    def stage_ensembles(self) -> dict[str, str]:
        c = self.config
        seed = stage_seed(c.seed, "ensembles")
        jobs = [(p.id, p.sequence, self.params, c.thermo, c.n_samples, seed + r, c.ensemble_mode,
                 c.exhaustive_limit) for r, p in enumerate(self._profiles())]
        lines = ["id\tstructure\tenergy\tprobability\n"]
        for rid, entries in _map(_ensemble_row, jobs, c.jobs):
            lines.extend(f"{rid}\t{db}\t{e!r}\t{p!r}\n" for db, e, p in entries)
        return {"ensembles.tsv": "".join(lines)}

    def stage_embed(self) -> dict[str, str]:
        c = self.config
        profiles = self._profiles()
        ensembles = parse_ensembles(self.read("ensembles.tsv"), {p.id: p.sequence for p in profiles})
        jobs = [(p.sequence, ensembles[p.id], self.params, c.radius) for p in profiles]
        rows = _map(_embed_row, jobs, c.jobs)
        ids = [p.id for p in profiles]
        kdict = kmer_dictionary(c.k)
        kmers = [kmer_counts(p.sequence, c.k, kdict) for p in profiles]
        out = {}
        for kind, name, slot in ((FACE, "ebof.tsv", 0), (NEIGHBORHOOD, "en.tsv", 1)):
            keys = sorted(set().union(*(row[slot] for row in rows)))
            dictionary = FeatureDictionary(kind, tuple(keys))
            fps = [fingerprint_from_counts(row[slot], dictionary) for row in rows]
            out[name] = stack_segments(ids, [(dictionary, fps), (kdict, kmers)]).to_tsv()
        return out

    def _matrix(self, rel: str) -> FeatureMatrix:
        return FeatureMatrix.from_tsv(self.read(rel))

    def stage_topics(self) -> dict[str, str]:
        c = self.config
        out = {}
        for name in ("ebof", "en"):
            X = self._matrix(f"{name}.tsv")
            n, d = X.shape
            tm = nmf(X, min(c.topics, n, d), c.nmf_iters, seed=stage_seed(c.seed, f"topics:{name}"))
            m, h = format_topics(tm, X.ids, X.columns)
            out[f"topics/{name}_M.tsv"], out[f"topics/{name}_H.tsv"] = m, h
        return out

    def stage_cluster(self) -> dict[str, str]:
        c = self.config
        out = {}
        sweep_lines = ["matrix\tk\tsilhouette\n"]
        for name in ("ebof", "en"):
            _, ids, M = parse_table(self.read(f"topics/{name}_M.tsv"))
            n = M.shape[0]
            seed = stage_seed(c.seed, f"cluster:{name}")
            lo, hi = min(c.sweep_min, n - 1), min(c.sweep_max, n - 1)
            best, scores = silhouette_sweep(M, max(2, lo), hi, seed, min(c.k_neighbors, n - 1))
            sweep_lines.extend(f"{name}\t{k}\t{s!r}\n" for k, s in scores.items())
            A = knn_similarity(M, min(c.k_neighbors, n - 1))
            out[f"clusters/{name}.tsv"] = format_clustering(spectral_clustering(A, best, best, seed), ids)
        out["clusters/sweep.tsv"] = "".join(sweep_lines)
        return out

    def _attribution(self):
        X = self._matrix("ebof.tsv")
        y = [p.total_pressure for p in self._profiles()]
        return X, ridge_fit(X, y, self.config.ridge_lambda)

    def stage_attribute(self) -> dict[str, str]:
        _, model = self._attribution()
        return {"attribution.json": attribution_json(model)}

    def stage_anomalies(self) -> dict[str, str]:
        X, model = self._attribution()
        _, clustering = parse_clustering(self.read("clusters/ebof.tsv"))
        sizes = {c: len(rows) for c, rows in clustering.members().items()}
        # shrink the anomalous set until W+ keeps enough rows to re-cluster
        top_m = min(self.config.top_m, clustering.k - 1)
        while True:
            report = cluster_delta(X, model, clustering, top_m)
            kept = sum(n for c, n in sizes.items() if c not in report.anomalous)
            if kept >= MIN_KEPT_ROWS or top_m == 0:
                break
            top_m -= 1
        if top_m < self.config.top_m:
            log.info("anomalous clusters capped at %d (of %d requested)", top_m, self.config.top_m)
        return {"anomalies.json": report_json(report, X.ids)}

    def stage_recommend(self) -> dict[str, str]:
        c = self.config
        X, model = self._attribution()
        profiles = self._profiles()
        _, clustering = parse_clustering(self.read("clusters/ebof.tsv"))
        anomalies = json.loads(self.read("anomalies.json"))
        anomalous = {int(k) for k, v in anomalies.items() if v["anomalous"]}
        neg, pos = restrict_and_rerun(X, model, clustering, anomalous, c.restricted_topics, c.restricted_clusters,
                                      stage_seed(c.seed, "recommend"), c.k_neighbors)
        kept = [profiles[r] for r in pos.rows]
        picks = recommend(pos.clustering, kept)
        out = {
            "topics/w_neg_M.tsv": format_topics(neg.topics, X.ids, [X.columns[j] for j in neg.columns])[0],
            "topics/w_pos_M.tsv": format_topics(pos.topics, [X.ids[r] for r in pos.rows],
                                                [X.columns[j] for j in pos.columns])[0],
            "clusters/w_neg.tsv": format_clustering(neg.clustering, X.ids),
            "clusters/w_pos.tsv": format_clustering(pos.clustering, [X.ids[r] for r in pos.rows]),
            "recommendations.json": json.dumps(
                {str(cid): {"highest_count": a, "highest_pressure": b} for cid, (a, b) in sorted(picks.items())},
                indent=1) + "\n",
        }
        return out

    def stage_tsne(self) -> dict[str, str]:
        c = self.config
        _, ids, M = parse_table(self.read("topics/ebof_M.tsv"))
        # small corpora cannot support the default perplexity
        perplexity = min(c.perplexity, (M.shape[0] - 1) / 3)
        res = tsne(M, perplexity, c.tsne_iters, stage_seed(c.seed, "tsne"))
        return {"tsne.tsv": format_coordinates(res.Y, ids)}

    def stage_figures(self) -> dict[str, str]:
        from .plotting import selex_scatter_svg, tsne_scatter_svg

        _, ids, Y = parse_table(self.read("tsne.tsv"))
        _, clustering = parse_clustering(self.read("clusters/ebof.tsv"))
        profiles = self._profiles()
        anomalies = json.loads(self.read("anomalies.json"))
        recs = json.loads(self.read("recommendations.json"))
        recommended = {v for r in recs.values() for v in r.values()}
        labels = {p.id: p.label for p in profiles}
        anomalous = {int(k) for k, v in anomalies.items() if v["anomalous"]}
        return {
            "figures/tsne_clusters.svg": tsne_scatter_svg(Y, clustering.assignments, ids, labels, recommended,
                                                          anomalous),
            "figures/selex_scatter.svg": selex_scatter_svg(profiles),
        }


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {cause}")


def _map(fn, jobs, n_jobs: int):
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _ensemble_row(job):
    rid, seq, params, thermo, n_samples, seed, mode, limit = job
    ens = boltzmann_ensemble(Sequence(seq, rid), params, thermo, n_samples, seed, mode, limit)
    return rid, [(st.dotbracket, e, p) for st, e, p in ens.entries]


def _embed_row(job):
    seq, ensemble, params, radius = job
    return (expected_counts(seq, ensemble, FACE, params),
            expected_counts(seq, ensemble, NEIGHBORHOOD, radius=radius))


def parse_ensembles(text: str, sequences: dict[str, str]) -> dict[str, EnsembleDistribution]:
    entries: dict[str, list] = {}
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        rid, db, e, p = line.split("\t")
        entries.setdefault(rid, []).append((SecondaryStructure.from_dotbracket(db), float(e), float(p)))
    out = {}
    for rid, seq in sequences.items():
        if rid not in entries:
            raise ValidationError(f"no ensemble for {rid}")
        out[rid] = EnsembleDistribution(seq, entries[rid], float("nan"), float("nan"), "file")
    return out


def config_json(config: PipelineConfig) -> str:
    return json.dumps(asdict(config), indent=1, sort_keys=True)
