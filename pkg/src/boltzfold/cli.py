"""``boltzfold`` command-line interface.

Exit codes: 0 success, 2 invalid input (bad sequence, missing file, parse
error), 1 pipeline stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import cluster_delta, knn_similarity, nmf, recommend, ridge_fit, silhouette_sweep, \
    spectral_clustering, tsne
from .analysis.io import attribution_json, format_clustering, format_coordinates, format_topics, parse_clustering, \
    parse_table, report_json
from .core import SecondaryStructure, Sequence, ValidationError
from .energy import Thermo, load_parameters
from .fingerprint import FACE, NEIGHBORHOOD, FeatureMatrix, bag_of_faces, bag_of_neighborhoods, \
    build_dictionary, expected_fingerprint, kmer_counts
from .folding import base_pair_probabilities, boltzmann_ensemble, fold_mfe
from .pipeline import Pipeline, PipelineConfig, StageError
from .selex import build_profiles, format_profiles, parse_profiles, parse_reads
from .structure_graph import motzkin_path

log = logging.getLogger("boltzfold")


def _fmt_energy(e: float) -> str:
    return f"{round(e, 2) + 0.0}"


def _sequences(arg: str) -> list[Sequence]:
    """A literal sequence, or a file of sequences (one per line, optional ``>id`` headers)."""
    p = Path(arg)
    if not p.is_file():
        return [Sequence(arg)]
    out, name = [], ""
    for line in p.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith(">"):
            name = line[1:].strip()
            continue
        out.append(Sequence(line, name))
        name = ""
    if not out:
        raise ValidationError(f"no sequences in {arg}")
    return out


def _thermo(args) -> Thermo:
    return Thermo(args.temperature)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- subcommands ---------------------------------------------------------------


def cmd_fold(args) -> int:
    params = load_parameters(args.params)
    for seq in _sequences(args.sequence):
        st, e = fold_mfe(seq, params)
        prefix = f">{seq.id}\n" if seq.id else ""
        print(f"{prefix}{st.dotbracket}  {_fmt_energy(e)}")
    return 0


def _ensemble(args, seq):
    mode = "exhaustive" if args.exhaustive else "sampled"
    return boltzmann_ensemble(seq, load_parameters(args.params), _thermo(args), args.samples, args.seed, mode,
                              args.limit)


def cmd_ensemble(args) -> int:
    seq = Sequence(args.sequence)
    ens = _ensemble(args, seq)
    _write("".join(f"{st.dotbracket}\t{e!r}\t{p!r}\n" for st, e, p in ens.entries), args.out)
    return 0


def cmd_pairs(args) -> int:
    seq = Sequence(args.sequence)
    bpp = base_pair_probabilities(seq, load_parameters(args.params), _thermo(args))
    lines = ["i\tj\tprobability\n"]
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            p = bpp.p_pair[i, j]
            if p > args.threshold:
                lines.append(f"{i + 1}\t{j + 1}\t{p!r}\n")
    _write("".join(lines), args.out)
    return 0


def cmd_motzkin(args) -> int:
    text = args.input
    if set(text) <= set("()."):
        st = SecondaryStructure.from_dotbracket(text)
    else:
        st, _ = fold_mfe(Sequence(text), load_parameters(args.params))
    print(" ".join(str(v) for v in motzkin_path(st)))
    return 0


def cmd_fingerprint(args) -> int:
    seq = Sequence(args.sequence, "query")
    params = load_parameters(args.params)
    if args.kind == "kmer":
        fp = kmer_counts(seq, args.k)
        segment = "KMER"
    else:
        ens = _ensemble(args, seq)
        if args.kind == "face":
            d = build_dictionary([(seq, ens)], FACE, params=params)
            fp = expected_fingerprint(seq, ens, bag_of_faces, d, params=params)
        else:
            d = build_dictionary([(seq, ens)], NEIGHBORHOOD, args.radius)
            fp = expected_fingerprint(seq, ens, bag_of_neighborhoods, d, radius=args.radius)
        segment = "FACE" if args.kind == "face" else "NBH"
    _write(json.dumps({"id": args.sequence, "segment": segment, "values": fp.as_dict()}, indent=1) + "\n", args.out)
    return 0


def cmd_ingest(args) -> int:
    profiles = build_profiles(parse_reads(args.reads), args.count_percentile, args.pressure_percentile)
    _write(format_profiles(profiles), args.out)
    return 0


def cmd_pipeline(args) -> int:
    if args.reads and not Path(args.reads).is_file():
        raise FileNotFoundError(f"reads file not found: {args.reads}")
    config = PipelineConfig(
        reads=args.reads or "", params=args.params, workdir=args.workdir, temperature_kelvin=args.temperature,
        n_samples=args.samples, ensemble_mode="exhaustive" if args.exhaustive else "sampled",
        exhaustive_limit=args.limit, k=args.k, radius=args.radius, topics=args.topics, sweep_min=args.sweep_min,
        sweep_max=args.sweep_max, restricted_topics=args.restricted_topics,
        restricted_clusters=args.restricted_clusters, k_neighbors=args.neighbors, ridge_lambda=args.ridge_lambda,
        top_m=args.top_m, perplexity=args.perplexity, tsne_iters=args.tsne_iters, seed=args.seed, jobs=args.jobs)
    pipe = Pipeline(config)
    pipe.run()
    print(f"ran: {' '.join(pipe.ran) or '-'}")
    print(f"cached: {' '.join(pipe.skipped) or '-'}")
    return 0


def cmd_nmf(args) -> int:
    X = FeatureMatrix.from_tsv(Path(args.matrix).read_text())
    tm = nmf(X, args.topics, args.iters, args.tol, args.seed)
    m, h = format_topics(tm, X.ids, X.columns)
    Path(args.out_prefix + "_M.tsv").write_text(m)
    Path(args.out_prefix + "_H.tsv").write_text(h)
    return 0


def cmd_cluster(args) -> int:
    _, ids, M = parse_table(Path(args.matrix).read_text())
    if args.k is None:
        best, scores = silhouette_sweep(M, args.sweep_min, min(args.sweep_max, len(ids) - 1), args.seed,
                                        min(args.neighbors, len(ids) - 1))
        log.info("silhouette sweep picked k=%d", best)
    else:
        best = args.k
    A = knn_similarity(M, min(args.neighbors, len(ids) - 1))
    _write(format_clustering(spectral_clustering(A, args.embed_dim or best, best, args.seed), ids), args.out)
    return 0


def _matrix_and_pressure(matrix: str, profiles: str):
    X = FeatureMatrix.from_tsv(Path(matrix).read_text())
    by_id = {p.id: p for p in parse_profiles(Path(profiles).read_text())}
    missing = [i for i in X.ids if i not in by_id]
    if missing:
        raise ValidationError(f"{len(missing)} matrix rows have no profile (first: {missing[0]})")
    return X, [by_id[i] for i in X.ids]


def cmd_attribute(args) -> int:
    X, profiles = _matrix_and_pressure(args.matrix, args.profiles)
    model = ridge_fit(X, [p.total_pressure for p in profiles], args.ridge_lambda)
    _write(attribution_json(model), args.out)
    return 0


def cmd_anomalies(args) -> int:
    X, profiles = _matrix_and_pressure(args.matrix, args.profiles)
    model = ridge_fit(X, [p.total_pressure for p in profiles], args.ridge_lambda)
    ids, clustering = parse_clustering(Path(args.clusters).read_text())
    if ids != X.ids:
        raise ValidationError("cluster file rows do not match the matrix rows")
    _write(report_json(cluster_delta(X, model, clustering, args.top_m), X.ids), args.out)
    return 0


def cmd_recommend(args) -> int:
    ids, clustering = parse_clustering(Path(args.clusters).read_text())
    by_id = {p.id: p for p in parse_profiles(Path(args.profiles).read_text())}
    missing = [i for i in ids if i not in by_id]
    if missing:
        raise ValidationError(f"{len(missing)} clustered ids have no profile (first: {missing[0]})")
    picks = recommend(clustering, [by_id[i] for i in ids])
    out = {str(c): {"highest_count": a, "highest_pressure": b} for c, (a, b) in sorted(picks.items())}
    _write(json.dumps(out, indent=1) + "\n", args.out)
    return 0


def cmd_tsne(args) -> int:
    _, ids, M = parse_table(Path(args.matrix).read_text())
    res = tsne(M, args.perplexity, args.iters, args.seed)
    _write(format_coordinates(res.Y, ids), args.out)
    return 0


def cmd_plot(args) -> int:
    from .plotting import tsne_scatter_svg

    header, ids, Y = parse_table(Path(args.coords).read_text())
    if Y.shape[1] != 2:
        raise ValidationError(f"expected 2 coordinate columns, got {Y.shape[1]}")
    c_ids, clustering = parse_clustering(Path(args.clusters).read_text())
    if c_ids != ids:
        raise ValidationError("cluster file rows do not match the coordinate rows")
    labels = {}
    if args.labels and Path(args.labels).is_file():
        labels = {p.id: p.label for p in parse_profiles(Path(args.labels).read_text())}
    recommended, anomalous = set(), set()
    if args.recommendations and Path(args.recommendations).is_file():
        recs = json.loads(Path(args.recommendations).read_text())
        recommended = {v for r in recs.values() for v in r.values()}
    if args.anomalies and Path(args.anomalies).is_file():
        anomalous = {int(k) for k, v in json.loads(Path(args.anomalies).read_text()).items() if v["anomalous"]}
    svg = tsne_scatter_svg(Y, clustering.assignments, ids, labels, recommended, anomalous)
    _write(svg, args.out)
    return 0


# --- parser ---------------------------------------------------------------


def _ensemble_flags(p):
    p.add_argument("--samples", type=int, default=1000, help="stochastic traceback draws (sampled mode)")
    p.add_argument("--exhaustive", action="store_true", help="enumerate every structure (short sequences)")
    p.add_argument("--limit", type=int, default=30, help="longest sequence allowed in exhaustive mode")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", default=argparse.SUPPRESS, help="energy parameter TSV")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--workdir", default=argparse.SUPPRESS, help="pipeline working directory")
    common.add_argument("--temperature", type=float, default=argparse.SUPPRESS, help="kelvin")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="boltzfold", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--params", default=None, help="energy parameter TSV (default: $BOLTZFOLD_PARAMS)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--workdir", default="boltzfold_run")
    parser.add_argument("--temperature", type=float, default=310.15)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=fn)
        return p

    p = add("fold", cmd_fold, "minimum free energy structure")
    p.add_argument("sequence", help="sequence or file of sequences")

    p = add("ensemble", cmd_ensemble, "Boltzmann ensemble as structure/energy/probability TSV")
    p.add_argument("sequence")
    _ensemble_flags(p)
    p.add_argument("-o", "--out")

    p = add("pairs", cmd_pairs, "base-pair probabilities")
    p.add_argument("sequence")
    p.add_argument("--threshold", type=float, default=1e-6)
    p.add_argument("-o", "--out")

    p = add("motzkin", cmd_motzkin, "Motzkin path of a dot-bracket string or of a sequence's MFE structure")
    p.add_argument("input")

    p = add("fingerprint", cmd_fingerprint, "expected fingerprint of one sequence as JSON")
    p.add_argument("sequence")
    p.add_argument("--kind", choices=("face", "nbh", "kmer"), default="face")
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("-k", type=int, default=4)
    _ensemble_flags(p)
    p.add_argument("-o", "--out")

    p = add("ingest", cmd_ingest, "SELEX reads TSV to labelled profile TSV")
    p.add_argument("reads")
    p.add_argument("--count-percentile", type=float, default=90)
    p.add_argument("--pressure-percentile", type=float, default=10)
    p.add_argument("-o", "--out")

    p = add("pipeline", cmd_pipeline, "full pipeline into --workdir")
    p.add_argument("reads", nargs="?", help="reads TSV (default: bundled synthetic dataset)")
    _ensemble_flags(p)
    p.add_argument("-k", type=int, default=4)
    p.add_argument("--radius", type=int, default=4)
    p.add_argument("--topics", type=int, default=25)
    p.add_argument("--sweep-min", type=int, default=5)
    p.add_argument("--sweep-max", type=int, default=50)
    p.add_argument("--restricted-topics", type=int, default=25)
    p.add_argument("--restricted-clusters", type=int, default=25)
    p.add_argument("--neighbors", type=int, default=10)
    p.add_argument("--lambda", dest="ridge_lambda", type=float, default=1.0)
    p.add_argument("--top-m", type=int, default=10)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--tsne-iters", type=int, default=1000)

    p = add("nmf", cmd_nmf, "topic model of a feature matrix TSV")
    p.add_argument("matrix")
    p.add_argument("--topics", type=int, default=25)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out-prefix", default="topics")

    p = add("cluster", cmd_cluster, "spectral clustering of a table (rows = items)")
    p.add_argument("matrix")
    p.add_argument("--k", type=int, help="cluster count; omit to sweep")
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--sweep-min", type=int, default=5)
    p.add_argument("--sweep-max", type=int, default=50)
    p.add_argument("--neighbors", type=int, default=10)
    p.add_argument("-o", "--out")

    p = add("attribute", cmd_attribute, "ridge coefficients of pressure on features")
    p.add_argument("matrix")
    p.add_argument("profiles")
    p.add_argument("--lambda", dest="ridge_lambda", type=float, default=1.0)
    p.add_argument("-o", "--out")

    p = add("anomalies", cmd_anomalies, "per-cluster delta scores")
    p.add_argument("matrix")
    p.add_argument("profiles")
    p.add_argument("clusters")
    p.add_argument("--lambda", dest="ridge_lambda", type=float, default=1.0)
    p.add_argument("--top-m", type=int, default=10)
    p.add_argument("-o", "--out")

    p = add("recommend", cmd_recommend, "highest-count and highest-pressure member per cluster")
    p.add_argument("clusters")
    p.add_argument("profiles")
    p.add_argument("-o", "--out")

    p = add("tsne", cmd_tsne, "2-D t-SNE coordinates of a table")
    p.add_argument("matrix")
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("-o", "--out")

    p = add("plot", cmd_plot, "SVG scatter of coordinates coloured by cluster")
    p.add_argument("coords")
    p.add_argument("clusters")
    p.add_argument("--labels", help="profile TSV with anomaly labels")
    p.add_argument("--anomalies", help="anomalies JSON")
    p.add_argument("--recommendations", help="recommendations JSON")
    p.add_argument("-o", "--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
