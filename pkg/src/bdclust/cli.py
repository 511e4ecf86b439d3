"""Command-line interface.

Subcommands: cluster (full pipeline on a data or distance CSV), simulate
(write synthetic data), eval (compare two label files), replicate (run the
desk-scale experiment grids).  Exit codes: 0 success, 2 usage or input
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, distmat, evalgen, experiments, priors, sampler, summaries
from .errors import BdclustError, NumericalError, ParameterError, ValidationError
from .likelihood import Assignment

CONFIG_KEYS = {
    "input": str,
    "distance": str,
    "header": bool,
    "q": float,
    "k": int,
    "iterations": int,
    "burn_in": int,
    "thin": int,
    "seed": int,
    "chains": int,
    "threads": int,
    "pca": int,
    "jitter": float,
    "beta_sigma": float,
    "dirichlet_conc": float,
    "sparsity_weight": float,
    "leapfrog_steps": int,
    "stepsize": float,
    "momentum_sd": float,
    "temperature": float,
    "rw_sd": float,
    "include_label_prior": bool,
    "init": str,
    "validate": bool,
}


def _coerce(key: str, value):
    typ = CONFIG_KEYS[key]
    if typ is bool and isinstance(value, str):
        return value.strip().lower() in {"1", "true", "yes", "on"}
    if value is None:
        return None
    return typ(value)


def read_config_file(path) -> dict:
    """Parse a JSON object or key = value lines; a run summary written by
    `cluster` is accepted directly (its "config" block is used)."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        obj = json.loads(text)
        if "config" in obj and isinstance(obj["config"], dict):
            obj = obj["config"]
    else:
        obj = {}
        for line_no, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{line_no}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            obj[key] = value
    out = {}
    for key, value in obj.items():
        if key in CONFIG_KEYS:
            out[key] = _coerce(key, value)
    return out


def _read_labels_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                rows.append([float(x) for x in parts])
            except ValueError:
                continue  # header line
    if not rows:
        raise ValidationError(f"no label rows found in {path}")
    arr = np.asarray(rows)
    labels = arr[:, 1] if arr.shape[1] >= 2 else arr[:, 0]
    as_int = labels.astype(int)
    if np.any(as_int != labels):
        raise ValidationError(f"labels in {path} must be integers")
    return as_int


def _write_labels_csv(path, labels) -> None:
    with open(path, "w") as fh:
        fh.write("index,label\n")
        for i, lab in enumerate(labels):
            fh.write(f"{i},{int(lab)}\n")


def _parse_float_list(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _parse_vector_list(text: str) -> tuple:
    return tuple(
        tuple(float(x) for x in chunk.split(",") if x.strip())
        for chunk in text.split(";")
        if chunk.strip()
    )


# ---------------------------------------------------------------------------
# cluster


def _resolve_cluster_config(args) -> dict:
    cfg = {
        "input": None,
        "distance": "minkowski:2",
        "header": False,
        "q": None,
        "k": 2,
        "iterations": 500,
        "burn_in": None,
        "thin": 1,
        "seed": 0,
        "chains": 1,
        "threads": 1,
        "pca": None,
        "jitter": None,
        "beta_sigma": None,
        "dirichlet_conc": None,
        "sparsity_weight": 1.0,
        "leapfrog_steps": 10,
        "stepsize": 0.05,
        "momentum_sd": 1.0,
        "temperature": 0.1,
        "rw_sd": 0.3,
        "include_label_prior": True,
        "init": "spectral",
        "validate": True,
    }
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    if args.no_validate:
        cfg["validate"] = False
    if args.no_label_prior:
        cfg["include_label_prior"] = False
    if cfg["input"] is None:
        raise ValidationError("an input file is required (--input or config)")
    return cfg


def _distances_from_config(cfg: dict, rng: np.random.Generator) -> tuple:
    """Load the input, apply preprocessing, and return (D, beta_sigma, notes)."""
    notes = []
    spec = cfg["distance"]
    path = cfg["input"]
    if not Path(path).exists():
        raise FileNotFoundError(f"input file not found: {path}")

    if spec == "precomputed":
        D = distmat.load_distance_matrix(path, validate=cfg["validate"])
        beta_sigma = cfg["beta_sigma"]
        if beta_sigma is None:
            beta_sigma = experiments.default_beta_sigma(D)
            notes.append(
                f"beta_sigma defaulted to median off-diagonal distance / 4 = {beta_sigma:.6g}"
            )
        return D, beta_sigma, notes

    X = distmat.load_data_matrix(path, header=cfg["header"])
    if cfg["jitter"] is not None:
        X = distmat.add_jitter(X, cfg["jitter"], rng)
        notes.append(f"added jitter with sd {cfg['jitter']}")
    if cfg["pca"] is not None:
        X = distmat.pca_project(X, cfg["pca"])
        notes.append(f"projected onto {cfg['pca']} principal components")

    if spec.startswith("minkowski"):
        q = cfg["q"]
        if q is None:
            q = float(spec.split(":", 1)[1]) if ":" in spec else 2.0
        D = distmat.compute_minkowski_distances(X, q=q)
    elif spec == "arccos":
        D = distmat.compute_arccos_distances(X)
    elif spec == "subspace":
        W = distmat.solve_self_expression(
            X, distmat.SubspaceEmbeddingConfig(sparsity_weight=cfg["sparsity_weight"])
        )
        D = distmat.compute_subspace_distances(W)
    else:
        raise ParameterError(f"unknown distance spec {spec!r}")

    beta_sigma = cfg["beta_sigma"]
    if beta_sigma is None:
        if spec == "subspace":
            beta_sigma = experiments.default_beta_sigma(D)
            notes.append(
                f"beta_sigma defaulted to median off-diagonal distance / 4 = {beta_sigma:.6g}"
            )
        else:
            ell = priors.mvee(X)
            beta_sigma = priors.elicit_beta_sigma(ell.volume, cfg["k"], X.shape[1])
            notes.append(
                f"beta_sigma elicited from enclosing ellipsoid volume {ell.volume:.6g}: "
                f"{beta_sigma:.6g}"
            )
    return D, beta_sigma, notes


def _initial_assignment(cfg: dict, D: np.ndarray, rng: np.random.Generator):
    init = cfg["init"]
    if init == "spectral":
        return None  # chain does its own seeded spectral initialization
    if init == "random":
        labels = rng.integers(1, cfg["k"] + 1, size=D.shape[0])
        return Assignment(labels, cfg["k"])
    if init.startswith("file:"):
        labels = _read_labels_csv(init[5:])
        return Assignment(labels, cfg["k"])
    raise ParameterError(f"unknown init {init!r}")


def cmd_cluster(args) -> int:
    cfg = _resolve_cluster_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(cfg["seed"])
    D, beta_sigma, notes = _distances_from_config(cfg, rng)
    cfg["beta_sigma"] = beta_sigma
    init = _initial_assignment(cfg, D, rng)

    hmc_cfg = sampler.HMCConfig(
        n_iterations=cfg["iterations"],
        burn_in=cfg["burn_in"],
        thin=cfg["thin"],
        leapfrog_steps=cfg["leapfrog_steps"],
        stepsize=cfg["stepsize"],
        momentum_sd=cfg["momentum_sd"],
        temperature=cfg["temperature"],
        rw_sd=cfg["rw_sd"],
        seed=cfg["seed"],
        include_label_prior=cfg["include_label_prior"],
    )
    cfg["burn_in"] = hmc_cfg.burn_in
    result = experiments.cluster_distance_matrix(
        D,
        k=cfg["k"],
        hmc_cfg=hmc_cfg,
        beta_sigma=beta_sigma,
        dirichlet_conc=cfg["dirichlet_conc"],
        n_chains=cfg["chains"],
        threads=cfg["threads"],
        init=init,
    )
    cfg["dirichlet_conc"] = result.prior_cfg.dirichlet_conc

    _write_labels_csv(out_dir / "labels.csv", result.point.labels)
    np.savetxt(out_dir / "coassign.csv", result.coassign, delimiter=",", fmt="%.17g")
    summary = {
        "version": __version__,
        "config": {key: cfg[key] for key in sorted(cfg)},
        "results": {
            "expected_vi": result.point.expected_vi,
            "cluster_sizes": np.bincount(
                result.point.labels - 1, minlength=cfg["k"]
            ).tolist(),
            "acceptance": result.trace.acceptance_rates(),
            "n_draws": result.trace.n_retained,
            "uncertainty": [float(u) for u in result.point.uncertainty],
            "factorization_error": result.factorization.objective,
            "notes": notes + result.trace.notes,
        },
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    print(f"wrote {out_dir / 'labels.csv'}, coassign.csv, summary.json")
    return 0


# ---------------------------------------------------------------------------
# simulate / eval / replicate


def cmd_simulate(args) -> int:
    spec_kwargs = {}
    if args.spec:
        spec_kwargs.update(json.loads(Path(args.spec).read_text()))
    for key in ("family", "n", "p", "seed", "subspace_dim"):
        value = getattr(args, key)
        if value is not None:
            spec_kwargs[key] = value
    if args.noise_sd is not None:
        spec_kwargs["noise_sd"] = args.noise_sd
    for key in ("weights", "locations", "scales", "skews", "concentrations"):
        value = getattr(args, key)
        if value is not None:
            spec_kwargs[key] = _parse_float_list(value)
    if args.directions is not None:
        spec_kwargs["directions"] = _parse_vector_list(args.directions)
    if "family" not in spec_kwargs:
        raise ValidationError("simulate requires --family or a spec file")

    spec = evalgen.GeneratorSpec(**spec_kwargs)
    X, labels = evalgen.generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    np.savetxt(out_dir / "data.csv", X, delimiter=",", fmt="%.17g")
    _write_labels_csv(out_dir / "labels.csv", labels)
    spec_json = {k: v for k, v in vars(spec).items() if v is not None}
    (out_dir / "spec.json").write_text(json.dumps(spec_json, indent=2, sort_keys=True))
    print(f"wrote {out_dir / 'data.csv'} and labels.csv for {spec.n} points")
    return 0


def cmd_eval(args) -> int:
    labels = _read_labels_csv(args.labels)
    truth = _read_labels_csv(args.truth)
    report = evalgen.metrics_report(labels, truth)
    payload = json.dumps(
        {"ari": report.ari, "nmi": report.nmi, "ami": report.ami}, indent=2, sort_keys=True
    )
    if args.out:
        Path(args.out).write_text(payload)
    print(payload)
    return 0


def _write_replicate_csv(path, result: dict) -> None:
    rows = result["rows"]
    key = "p" if result["table"] == "table1" else "chord"
    baseline = "gmm"
    with open(path, "w") as fh:
        fh.write(
            f"{key},bdc_mean,bdc_lo,bdc_hi,{baseline}_mean,{baseline}_lo,{baseline}_hi\n"
        )
        for row in rows:
            b, g = row["bdc"], row[baseline]
            fh.write(
                f"{row[key]},{b['mean']:.4f},{b['lo']:.4f},{b['hi']:.4f},"
                f"{g['mean']:.4f},{g['lo']:.4f},{g['hi']:.4f}\n"
            )


def cmd_replicate(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.table == "table1":
        result = experiments.table1_experiment(n_reps=args.reps or 10, seed=args.seed)
    elif args.table == "table4":
        result = experiments.table4_experiment(n_reps=args.reps or 5, seed=args.seed)
    else:
        raise ParameterError(f"unknown table id {args.table!r}")
    csv_path = out_dir / f"replicate_{result['table']}.csv"
    _write_replicate_csv(csv_path, result)
    (out_dir / f"replicate_{result['table']}.json").write_text(
        json.dumps(result, indent=2, sort_keys=True, default=float)
    )
    print(f"wrote {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdclust",
        description="Bayesian clustering of pairwise distance matrices",
    )
    parser.add_argument("--version", action="version", version=f"bdclust {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("cluster", help="cluster a data or distance CSV")
    pc.add_argument("--input", help="CSV file: n x p data or n x n distances")
    pc.add_argument(
        "--distance",
        help="minkowski[:q] | arccos | subspace | precomputed (default minkowski:2)",
    )
    pc.add_argument("--header", action="store_true", default=None,
                    help="data CSV has a header row")
    pc.add_argument("--q", type=float, help="Minkowski order (overrides the spec suffix)")
    pc.add_argument("--k", type=int, help="maximum number of clusters")
    pc.add_argument("--iters", dest="iterations", type=int, help="sampler iterations")
    pc.add_argument("--burn-in", dest="burn_in", type=int)
    pc.add_argument("--thin", type=int)
    pc.add_argument("--seed", type=int)
    pc.add_argument("--chains", type=int)
    pc.add_argument("--threads", type=int)
    pc.add_argument("--pca", type=int, help="project onto this many principal components")
    pc.add_argument("--jitter", type=float, nargs="?", const=1e-8,
                    help="add Gaussian noise with this sd (default 1e-8)")
    pc.add_argument("--beta-sigma", dest="beta_sigma", type=float)
    pc.add_argument("--conc", dest="dirichlet_conc", type=float)
    pc.add_argument("--sparsity-weight", dest="sparsity_weight", type=float)
    pc.add_argument("--leapfrog-steps", dest="leapfrog_steps", type=int)
    pc.add_argument("--stepsize", type=float)
    pc.add_argument("--momentum-sd", dest="momentum_sd", type=float)
    pc.add_argument("--temperature", type=float)
    pc.add_argument("--rw-sd", dest="rw_sd", type=float)
    pc.add_argument("--init", help="spectral | random | file:<labels.csv>")
    pc.add_argument("--no-validate", action="store_true")
    pc.add_argument("--no-label-prior", action="store_true")
    pc.add_argument("--config", help="JSON or key=value config file (flags override)")
    pc.add_argument("--out", required=True, help="output directory")
    pc.set_defaults(func=cmd_cluster)

    ps = sub.add_parser("simulate", help="generate synthetic mixture data")
    ps.add_argument("--family", choices=sorted(
        {"skew_normal_mixture", "vmf_mixture", "laplace_mixture", "subspace_mixture"}
    ))
    ps.add_argument("--n", type=int)
    ps.add_argument("--p", type=int)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--weights")
    ps.add_argument("--locations")
    ps.add_argument("--scales")
    ps.add_argument("--skews")
    ps.add_argument("--concentrations")
    ps.add_argument("--directions", help="semicolon-separated unit vectors, e.g. '1,0;0,1'")
    ps.add_argument("--subspace-dim", dest="subspace_dim", type=int)
    ps.add_argument("--noise-sd", dest="noise_sd", type=float)
    ps.add_argument("--spec", help="JSON file with generator fields")
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_simulate)

    pe = sub.add_parser("eval", help="compare two label CSVs")
    pe.add_argument("--labels", required=True)
    pe.add_argument("--truth", required=True)
    pe.add_argument("--out")
    pe.set_defaults(func=cmd_eval)

    pr = sub.add_parser("replicate", help="run a desk-scale replication grid")
    pr.add_argument("table", help="table1 | table4")
    pr.add_argument("--reps", type=int)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_replicate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except BdclustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
