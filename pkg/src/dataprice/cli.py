"""Command-line pipeline driver.

Subcommands mirror the modeling pipeline: ingest, annotate, featurize,
select, train, evaluate, explain, curve, report. Each stage reads a YAML
run configuration, derives its randomness from the single master seed,
writes its artifacts plus a manifest (config hash, input hashes) under the
output directory, and short-circuits with an "up-to-date" notice when
nothing changed. Exit codes: 0 success, 1 validation error, 2 runtime
error. Logs go to standard error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import shutil
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .annotate import AnnotationError, annotate_file
from .corpus import (CorpusError, TargetSpec, compose_text, describe,
                     load_products, make_targets, save_products,
                     structured_matrix)
from .evaluate import (FAMILIES, REPRESENTATIONS, feature_curve,
                       fit_family, fit_representation, merge_config,
                       mix_seed, run_grid)
from .explain import beeswarm_csv, embedding_keywords, global_importance, shap_values
from .featsel import mrmr_select
from .matrix import FeatureMatrix
from .models import load_model, save_model
from .synth import generate_products
from .textrep.word2vec import EmbeddingTable

log = logging.getLogger("dataprice")


class ConfigError(ValueError):
    pass


DEFAULT_RUN = {
    "seed": None,
    "threads": 1,
    "out_dir": "runs/default",
    "data": {"path": None, "format": "csv", "synthetic": None},
    "target": {"task": "regression"},
    "representations": list(REPRESENTATIONS),
    "families": list(FAMILIES),
    "cv": {"k": 5},
    "select": {"representation": "bow", "m": 20, "n_bins": 10},
    "train": {"representation": "bow", "family": "gbt"},
    "explain": {"rows": 20, "n_samples": 512, "background_rows": 50,
                "keyword_dims": 3, "top_k": 15},
    "curve": {"representation": "bow", "family": "gbt",
              "m_values": [1, 2, 3, 4, 5, 6, 8, 10]},
    "annotate": {"input": None, "format": "csv", "endpoint": None,
                 "model": "default", "timeout": 30.0, "retries": 3,
                 "cache_dir": None, "batch_size": 16},
    "hyperparameters": {},
}


def _merge(base: dict, overrides: dict, path: str = "") -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for k, v in overrides.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v, path + k + ".")
        else:
            out[k] = v
    return out


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError("config file not found: %s" % path)
    except yaml.YAMLError as exc:
        raise ConfigError("config is not valid YAML: %s" % exc)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    cfg = _merge(DEFAULT_RUN, raw)
    errors = []
    if not isinstance(cfg["seed"], int):
        errors.append("seed: an integer master seed is required")
    for i, r in enumerate(cfg["representations"]):
        if r not in REPRESENTATIONS:
            errors.append("representations[%d]: unknown representation %r" % (i, r))
    for i, f in enumerate(cfg["families"]):
        if f not in FAMILIES:
            errors.append("families[%d]: unknown family %r" % (i, f))
    if cfg["target"]["task"] not in ("regression", "classification"):
        errors.append("target.task: must be regression or classification")
    if not isinstance(cfg["cv"]["k"], int) or cfg["cv"]["k"] < 2:
        errors.append("cv.k: must be an integer >= 2")
    for key in ("select", "train", "curve"):
        rep = cfg[key].get("representation")
        if rep not in REPRESENTATIONS:
            errors.append("%s.representation: unknown representation %r" % (key, rep))
    for key in ("train", "curve"):
        fam = cfg[key].get("family")
        if fam not in FAMILIES:
            errors.append("%s.family: unknown family %r" % (key, fam))
    ms = cfg["curve"]["m_values"]
    if (not isinstance(ms, list) or not ms
            or any(not isinstance(m, int) or m < 1 for m in ms)
            or ms != sorted(ms)):
        errors.append("curve.m_values: must be an ascending list of positive integers")
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return cfg


# ------------------------------------------------------------- manifests ----

def config_hash(cfg: dict) -> str:
    # thread count caps workers without changing results, so it is not
    # part of the identity of an artifact
    trimmed = {k: v for k, v in cfg.items() if k != "threads"}
    blob = json.dumps(trimmed, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _manifest_path(out_dir: Path, stage: str) -> Path:
    return out_dir / ("%s.manifest.json" % stage)


def up_to_date(out_dir: Path, stage: str, chash: str, inputs: list[str]) -> bool:
    path = _manifest_path(out_dir, stage)
    if not path.exists():
        return False
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return False
    if manifest.get("config_hash") != chash:
        return False
    for f in inputs:
        if not Path(f).exists():
            return False
        if manifest.get("input_hashes", {}).get(str(f)) != file_hash(f):
            return False
    for f in manifest.get("outputs", []):
        if not (out_dir / f).exists():
            return False
    return True


def write_manifest(out_dir: Path, stage: str, chash: str, inputs: list[str],
                   outputs: list[str]) -> None:
    manifest = {
        "stage": stage,
        "version": __version__,
        "config_hash": chash,
        "input_hashes": {str(f): file_hash(f) for f in inputs},
        "outputs": outputs,
    }
    _manifest_path(out_dir, stage).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def require_artifact(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise ConfigError("missing artifact %s; run `dataprice %s` first"
                          % (path, produced_by))
    return path


# ---------------------------------------------------------------- stages ----

def _load_corpus(out_dir: Path):
    path = require_artifact(out_dir / "products.jsonl", "ingest")
    return load_products(path, format="jsonl"), path


def _model_config(cfg: dict) -> dict:
    hp = dict(cfg["hyperparameters"])
    forest = dict(hp.get("forest", {}))
    forest.setdefault("n_threads", int(cfg.get("threads", 1)))
    hp["forest"] = forest
    return hp


def cmd_ingest(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    synthetic = cfg["data"].get("synthetic")
    inputs = [] if synthetic else [cfg["data"]["path"]]
    if synthetic is None and not cfg["data"]["path"]:
        raise ConfigError("data.path: required unless data.synthetic is set")
    if up_to_date(out_dir, "ingest", chash, inputs):
        log.info("ingest: up-to-date")
        return 0
    if synthetic:
        products = generate_products(int(synthetic), seed=mix_seed(cfg["seed"], "synth"))
        log.info("ingest: generated %d synthetic listings", len(products))
    else:
        products = load_products(cfg["data"]["path"], format=cfg["data"]["format"])
        log.info("ingest: loaded %d listings from %s", len(products), cfg["data"]["path"])
    save_products(products, out_dir / "products.jsonl", format="jsonl")
    describe(products).to_csv(out_dir / "descriptive_stats.csv")
    write_manifest(out_dir, "ingest", chash, inputs,
                   ["products.jsonl", "descriptive_stats.csv"])
    return 0


def cmd_annotate(cfg, out_dir: Path) -> int:
    a = cfg["annotate"]
    if not a["input"]:
        raise ConfigError("annotate.input: a raw listings file is required")
    chash = config_hash(cfg)
    if up_to_date(out_dir, "annotate", chash, [a["input"]]):
        log.info("annotate: up-to-date")
        return 0
    stats = annotate_file(a["input"], out_dir / "products.jsonl",
                          format=a["format"], endpoint=a["endpoint"],
                          model=a["model"], timeout=a["timeout"],
                          retries=a["retries"], cache_dir=a["cache_dir"],
                          batch_size=a["batch_size"])
    log.info("annotate: %(refund_annotated)d refund levels, "
             "%(industry_annotated)d industry vectors over %(rows)d rows", stats)
    write_manifest(out_dir, "annotate", chash, [a["input"]], ["products.jsonl"])
    return 0


def cmd_featurize(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    products, products_path = _load_corpus(out_dir)
    if up_to_date(out_dir, "featurize", chash, [products_path]):
        log.info("featurize: up-to-date")
        return 0
    texts = [compose_text(p) for p in products]
    mcfg = _model_config(cfg)
    outputs = []
    for rep in cfg["representations"]:
        seed = mix_seed(cfg["seed"], rep, "full")
        if rep == "word2vec":
            from .textrep import embedding_features
            # persist the embedding table for keyword back-mapping later
            table = _fit_embedding_table(texts, mcfg, seed)
            table.save(out_dir / "embedding_word2vec.txt")
            outputs.append("embedding_word2vec.txt")
            feats = embedding_features(texts, table)
        else:
            feats, _ = fit_representation(rep, texts, mcfg, seed)
        fname = "features_%s.csv" % rep
        feats.to_csv(out_dir / fname)
        outputs.append(fname)
        log.info("featurize: %s -> %d columns", rep, feats.n_cols)
    structured_matrix(products).to_csv(out_dir / "features_structured.csv")
    outputs.append("features_structured.csv")
    write_manifest(out_dir, "featurize", chash, [products_path], outputs)
    return 0


def _fit_embedding_table(texts, mcfg, seed) -> EmbeddingTable:
    from .textrep import train_skipgram
    w = merge_config(mcfg)["word2vec"]
    return train_skipgram(texts, d=w["d"], window=w["window"], epochs=w["epochs"],
                          lr=w["lr"], negatives=w["negatives"], seed=seed,
                          max_terms=merge_config(mcfg)["max_terms"])


def _full_features(cfg, out_dir: Path, rep: str) -> FeatureMatrix:
    text_feats = FeatureMatrix.from_csv(
        require_artifact(out_dir / ("features_%s.csv" % rep), "featurize"))
    struct = FeatureMatrix.from_csv(
        require_artifact(out_dir / "features_structured.csv", "featurize"))
    return text_feats.hstack(struct)


def _targets(cfg, products):
    return make_targets(products, TargetSpec(cfg["target"]["task"]))


def cmd_select(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    rep = cfg["select"]["representation"]
    products, products_path = _load_corpus(out_dir)
    inputs = [products_path, out_dir / ("features_%s.csv" % rep),
              out_dir / "features_structured.csv"]
    require_artifact(inputs[1], "featurize")
    if up_to_date(out_dir, "select", chash, inputs):
        log.info("select: up-to-date")
        return 0
    feats = _full_features(cfg, out_dir, rep)
    y = _targets(cfg, products)
    trace = mrmr_select(feats, y, cfg["select"]["m"],
                        n_bins=cfg["select"]["n_bins"],
                        target_is_discrete=cfg["target"]["task"] == "classification")
    fname = "selection_%s.csv" % rep
    trace.to_csv(out_dir / fname)
    log.info("select: kept %d of %d features (first: %s)", len(trace.steps),
             feats.n_cols, feats.columns[trace.selected[0]])
    write_manifest(out_dir, "select", chash, inputs, [fname])
    return 0


def cmd_train(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    rep, family = cfg["train"]["representation"], cfg["train"]["family"]
    products, products_path = _load_corpus(out_dir)
    inputs = [products_path, out_dir / ("features_%s.csv" % rep),
              out_dir / "features_structured.csv"]
    require_artifact(inputs[1], "featurize")
    if up_to_date(out_dir, "train", chash, inputs):
        log.info("train: up-to-date")
        return 0
    feats = _full_features(cfg, out_dir, rep)
    y = _targets(cfg, products)
    task = cfg["target"]["task"]
    model = fit_family(family, feats.values, y, task, 5, merge_config(_model_config(cfg)),
                       mix_seed(cfg["seed"], rep, family, "train"))
    model.manifest = list(feats.columns)
    fname = "model_%s_%s.json" % (rep, family)
    save_model(model, out_dir / fname)
    log.info("train: saved %s (%s, %s)", fname, family, task)
    write_manifest(out_dir, "train", chash, inputs, [fname])
    return 0


def cmd_evaluate(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    products, products_path = _load_corpus(out_dir)
    if up_to_date(out_dir, "evaluate", chash, [products_path]):
        log.info("evaluate: up-to-date")
        return 0
    task = cfg["target"]["task"]
    report = run_grid(products, cfg["representations"], cfg["families"],
                      task=task, config=_model_config(cfg), seed=cfg["seed"],
                      k=cfg["cv"]["k"])
    report.to_csv(out_dir / ("report_%s.csv" % task))
    (out_dir / ("report_%s.txt" % task)).write_text(report.to_text(),
                                                    encoding="utf-8")
    for rep, fam, fold, msg in report.errors:
        log.warning("evaluate: cell (%s, %s) fold %s failed: %s", rep, fam, fold, msg)
    log.info("evaluate: wrote report_%s.{csv,txt}", task)
    write_manifest(out_dir, "evaluate", chash, [products_path],
                   ["report_%s.csv" % task, "report_%s.txt" % task])
    return 0


def cmd_explain(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    rep, family = cfg["train"]["representation"], cfg["train"]["family"]
    model_path = require_artifact(out_dir / ("model_%s_%s.json" % (rep, family)),
                                  "train")
    inputs = [model_path, out_dir / ("features_%s.csv" % rep),
              out_dir / "features_structured.csv"]
    if up_to_date(out_dir, "explain", chash, inputs):
        log.info("explain: up-to-date")
        return 0
    model = load_model(model_path)
    feats = _full_features(cfg, out_dir, rep)
    e = cfg["explain"]
    rows = min(int(e["rows"]), feats.n_rows)
    rng = np.random.default_rng(mix_seed(cfg["seed"], "explain"))
    bg_idx = rng.choice(feats.n_rows,
                        size=min(int(e["background_rows"]), feats.n_rows),
                        replace=False)
    phi, _ = shap_values(model, feats.values[:rows], feats.values[bg_idx],
                         n_samples=int(e["n_samples"]),
                         seed=mix_seed(cfg["seed"], "explain", "kernel"))
    importance = global_importance(phi, feats.columns)
    importance.to_csv(out_dir / "importance.csv")
    beeswarm_csv(phi, feats.values[:rows], feats.columns, out_dir / "beeswarm.csv")
    outputs = ["importance.csv", "beeswarm.csv"]

    table_path = out_dir / "embedding_word2vec.txt"
    if rep == "word2vec" and table_path.exists():
        table = EmbeddingTable.load(table_path)
        top = [name for name, _ in importance.top(len(feats.columns))
               if name.startswith("embedding_")][:int(e["keyword_dims"])]
        with open(out_dir / "embedding_keywords.csv", "w", encoding="utf-8") as fh:
            fh.write("dimension,direction,rank,term,loading\n")
            for name in top:
                dim = int(name.split("_")[1])
                words = embedding_keywords(table, dim, k=int(e["top_k"]))
                for direction in ("positive", "negative"):
                    for r, (term, loading) in enumerate(words[direction], 1):
                        fh.write("%d,%s,%d,%s,%.6g\n" % (dim, direction, r, term, loading))
        outputs.append("embedding_keywords.csv")
    log.info("explain: wrote %s", ", ".join(outputs))
    write_manifest(out_dir, "explain", chash, inputs, outputs)
    return 0


def cmd_curve(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    products, products_path = _load_corpus(out_dir)
    if up_to_date(out_dir, "curve", chash, [products_path]):
        log.info("curve: up-to-date")
        return 0
    c = cfg["curve"]
    curve = feature_curve(products, c["representation"], c["family"],
                          c["m_values"], task=cfg["target"]["task"],
                          config=_model_config(cfg), seed=cfg["seed"],
                          k=cfg["cv"]["k"])
    fname = "curve_%s_%s.csv" % (c["representation"], c["family"])
    curve.to_csv(out_dir / fname)
    log.info("curve: wrote %s", fname)
    write_manifest(out_dir, "curve", chash, [products_path], [fname])
    return 0


def cmd_report(cfg, out_dir: Path) -> int:
    chash = config_hash(cfg)
    task = cfg["target"]["task"]
    pieces = {
        "evaluate": ["report_%s.csv" % task, "report_%s.txt" % task],
        "curve": ["curve_%s_%s.csv" % (cfg["curve"]["representation"],
                                       cfg["curve"]["family"])],
    }
    report_dir = out_dir / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    copied = []
    for stage, files in pieces.items():
        mpath = _manifest_path(out_dir, stage)
        if not mpath.exists():
            raise ConfigError("missing %s outputs; run `dataprice %s` first"
                              % (stage, stage))
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
        if manifest.get("config_hash") != chash:
            raise ConfigError("%s artifacts were produced with a different "
                              "configuration; rerun `dataprice %s`" % (stage, stage))
        for f in files:
            require_artifact(out_dir / f, stage)
            shutil.copyfile(out_dir / f, report_dir / f)
            copied.append(f)
    optional = ["importance.csv", "beeswarm.csv", "embedding_keywords.csv",
                "descriptive_stats.csv"]
    for f in optional:
        if (out_dir / f).exists():
            shutil.copyfile(out_dir / f, report_dir / f)
            copied.append(f)
    summary = ["run summary", "===========",
               "config hash: %s" % chash, "task: %s" % task,
               "artifacts: %s" % ", ".join(sorted(copied)), ""]
    (report_dir / "SUMMARY.txt").write_text("\n".join(summary), encoding="utf-8")
    log.info("report: assembled %d artifacts under %s", len(copied), report_dir)
    write_manifest(out_dir, "report", chash, [],
                   ["report/" + f for f in copied] + ["report/SUMMARY.txt"])
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "annotate": cmd_annotate,
    "featurize": cmd_featurize,
    "select": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "curve": cmd_curve,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dataprice",
        description="Price modeling pipeline for data-product listings.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name, help="run the %s stage" % name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--threads", type=int, default=None,
                       help="cap worker threads (does not change results)")
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            cfg["threads"] = args.threads
        out_dir = Path(cfg["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, out_dir)
    except (ConfigError, CorpusError, AnnotationError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failure boundary
        log.error("runtime failure: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
