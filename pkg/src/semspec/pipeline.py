"""End-to-end pipeline: configuration, stages, artifact metadata.

Configuration is a flat, line-oriented ``section.key = value`` text
format; command-line or request overrides replace file values before
anything runs. Every artifact written (embeddings, checkpoints, reports)
gets a ``<path>.meta`` sidecar recording the effective config hash and
the global seed, so identical configurations reproduce identical
outputs.

Stage outputs inside the output directory:

- ``specialized_seen.txt``  vectors of constraint words after initial
  specialization
- ``generator.txt``         trained mapping-network checkpoint
- ``specialized_all.txt``   full vocabulary after global mapping
- ``similarity_report.tsv`` one row per evaluation dataset
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field, fields as dc_fields

from .attract_repel import ArConfig, run_attract_repel
from .constraints import ConstraintSet, filter_for_setting, load_constraint_pairs, merge_and_deconflict
from .diagnostics import get_logger, kv_line
from .embeddings import SeenVocab, VectorSpace, load_embeddings, save_embeddings
from .errors import ValidationError
from .evaluation import SimilarityDataset, evaluate_similarity, load_similarity_dataset
from .harness import make_cluster_task, make_linear_task, planted_benchmark
from .neuralnet import load_checkpoint, save_checkpoint
from .postspec import PostSpecConfig, apply_global_mapping, make_mapping_pairs, train_post_specializer

log = get_logger(__name__)

SPECIALIZED_SEEN = "specialized_seen.txt"
GENERATOR_CKPT = "generator.txt"
SPECIALIZED_ALL = "specialized_all.txt"
REPORT_TSV = "similarity_report.tsv"

CONSTRAINT_SETTINGS = ("external", "babelnet", "external_babelnet")


@dataclass
class PipelineConfig:
    vectors: str = ""
    output_dir: str = "out"
    external_synonyms: str = ""
    external_antonyms: str = ""
    babelnet_synonyms: str = ""
    babelnet_antonyms: str = ""
    eval_datasets: list = field(default_factory=list)  # (format, path, score_column)
    setting: str = "overlap"
    constraint_setting: str = "external"
    strip_lang_prefix: bool = False
    header_policy: str = "auto"
    seed: int = 42
    ar: ArConfig = field(default_factory=ArConfig)
    post: PostSpecConfig = field(default_factory=PostSpecConfig)

    def validate_paths(self) -> None:
        required = [("io.vectors", self.vectors)]
        if self.constraint_setting in ("external", "external_babelnet"):
            required.append(("io.external_synonyms", self.external_synonyms))
        if self.constraint_setting in ("babelnet", "external_babelnet"):
            required.append(("io.babelnet_synonyms", self.babelnet_synonyms))
        for key, value in required:
            if not value:
                raise ValidationError(f"config key {key} is required")
            if not os.path.exists(value):
                raise FileNotFoundError(f"{key}: no such file: {value}")
        for optional in (
            self.external_antonyms,
            self.babelnet_antonyms,
        ):
            if optional and not os.path.exists(optional):
                raise FileNotFoundError(f"no such file: {optional}")
        for _, path, _ in self.eval_datasets:
            if not os.path.exists(path):
                raise FileNotFoundError(f"evaluation dataset not found: {path}")


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return parse_config_text(handle.read())


def config_hash(kv: dict) -> str:
    canonical = "\n".join(f"{k}={kv[k]}" for k in sorted(kv))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _parse_bool(value: str) -> bool:
    low = value.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValidationError(f"expected boolean, got {value!r}")


def _parse_dataset_spec(spec: str):
    parts = spec.split(":", 2)
    if len(parts) < 2:
        raise ValidationError(f"dataset spec must be 'format:path', got {spec!r}")
    fmt, path = parts[0], parts[1]
    column = parts[2] if len(parts) == 3 else "SimLex999"
    return (fmt, path, column)


def _assign(obj, name: str, value: str, key: str):
    hints = {f.name: f.type for f in dc_fields(obj)}
    if name not in hints:
        raise ValidationError(f"unknown config key {key!r}")
    current = getattr(obj, name)
    if isinstance(current, bool):
        parsed = _parse_bool(value)
    elif isinstance(current, int):
        parsed = int(value)
    elif isinstance(current, float):
        parsed = float(value)
    elif isinstance(current, tuple):
        parsed = tuple(int(v) for v in value.split(",") if v.strip())
    elif current is None:
        parsed = None if value.lower() in ("none", "") else value
    else:
        parsed = value
    setattr(obj, name, parsed)


def build_pipeline_config(kv: dict) -> PipelineConfig:
    """Materialize the flat key=value mapping into typed configuration.

    The global seed feeds both phases unless ``ar.seed`` / ``post.seed``
    are set explicitly.
    """
    cfg = PipelineConfig()
    ar_seed_set = post_seed_set = False
    for key, value in kv.items():
        if key == "seed":
            cfg.seed = int(value)
        elif key.startswith("io."):
            name = key[3:]
            if name == "eval_datasets":
                cfg.eval_datasets = [
                    _parse_dataset_spec(s.strip()) for s in value.split(",") if s.strip()
                ]
            elif name in (
                "vectors",
                "output_dir",
                "external_synonyms",
                "external_antonyms",
                "babelnet_synonyms",
                "babelnet_antonyms",
                "header_policy",
            ):
                setattr(cfg, name, value)
            else:
                raise ValidationError(f"unknown config key {key!r}")
        elif key.startswith("protocol."):
            name = key[len("protocol.") :]
            if name == "setting":
                cfg.setting = value
            elif name == "constraints":
                if value not in CONSTRAINT_SETTINGS:
                    raise ValidationError(f"unknown constraint setting {value!r}")
                cfg.constraint_setting = value
            elif name == "strip_lang_prefix":
                cfg.strip_lang_prefix = _parse_bool(value)
            else:
                raise ValidationError(f"unknown config key {key!r}")
        elif key.startswith("ar."):
            _assign(cfg.ar, key[3:], value, key)
            ar_seed_set = ar_seed_set or key == "ar.seed"
        elif key.startswith("post."):
            _assign(cfg.post, key[5:], value, key)
            post_seed_set = post_seed_set or key == "post.seed"
        else:
            raise ValidationError(f"unknown config key {key!r}")
    if not ar_seed_set:
        cfg.ar.seed = cfg.seed
    if not post_seed_set:
        cfg.post.seed = cfg.seed + 1
    cfg.ar.__post_init__()
    cfg.post.__post_init__()
    return cfg


def write_sidecar(path: str, cfg_hash: str, seed: int) -> None:
    with open(str(path) + ".meta", "w", encoding="utf-8") as handle:
        handle.write(f"config_hash={cfg_hash}\nseed={seed}\n")


def load_constraints(cfg: PipelineConfig) -> ConstraintSet:
    """Assemble the constraint set for the configured source setting."""

    def load_source(syn_path, ant_path, tag):
        cs = load_constraint_pairs(syn_path, "synonym", tag, cfg.strip_lang_prefix)
        if ant_path:
            ant = load_constraint_pairs(ant_path, "antonym", tag, cfg.strip_lang_prefix)
            cs = merge_and_deconflict(cs, ant)
        return cs

    if cfg.constraint_setting == "external":
        return load_source(cfg.external_synonyms, cfg.external_antonyms, "external")
    if cfg.constraint_setting == "babelnet":
        return load_source(cfg.babelnet_synonyms, cfg.babelnet_antonyms, "babelnet")
    external = load_source(cfg.external_synonyms, cfg.external_antonyms, "external")
    babelnet = load_source(cfg.babelnet_synonyms, cfg.babelnet_antonyms, "babelnet")
    return merge_and_deconflict(external, babelnet)


def load_eval_datasets(cfg: PipelineConfig) -> list[SimilarityDataset]:
    return [
        load_similarity_dataset(path, fmt, score_column=column)
        for fmt, path, column in cfg.eval_datasets
    ]


def eval_word_set(datasets) -> set:
    words = set()
    for ds in datasets:
        words |= ds.words
    return words


def _prepare(cfg: PipelineConfig):
    cfg.validate_paths()
    os.makedirs(cfg.output_dir, exist_ok=True)
    space = load_embeddings(cfg.vectors, cfg.header_policy)
    constraints = load_constraints(cfg)
    datasets = load_eval_datasets(cfg)
    filtered, seen = filter_for_setting(constraints, space, eval_word_set(datasets), cfg.setting)
    return space, filtered, seen, datasets


def stage_specialize(cfg: PipelineConfig, cfg_hash: str) -> dict:
    """Attract-Repel on the filtered constraints; writes the seen-word
    subspace."""
    space, filtered, seen, _ = _prepare(cfg)
    cost_log: list = []
    specialized = run_attract_repel(space, filtered, seen, cfg.ar, cost_log=cost_log)
    out_path = os.path.join(cfg.output_dir, SPECIALIZED_SEEN)
    save_embeddings(specialized, out_path, with_header=True)
    write_sidecar(out_path, cfg_hash, cfg.seed)
    summary = {
        "output": out_path,
        "seen_words": len(specialized),
        "synonym_pairs": len(filtered.synonyms),
        "antonym_pairs": len(filtered.antonyms),
        "first_epoch_cost": cost_log[0]["total"] if cost_log else 0.0,
        "final_epoch_cost": cost_log[-1]["total"] if cost_log else 0.0,
    }
    log.info(kv_line(event="stage_specialize_done", **summary))
    return summary


def stage_postspec(cfg: PipelineConfig, cfg_hash: str) -> dict:
    """Train the global mapping network from (original, specialized)
    pairs of the seen words; writes a checkpoint."""
    cfg.validate_paths()
    seen_path = os.path.join(cfg.output_dir, SPECIALIZED_SEEN)
    if not os.path.exists(seen_path):
        raise FileNotFoundError(f"run specialize first: missing {seen_path}")
    space = load_embeddings(cfg.vectors, cfg.header_policy)
    specialized_seen = load_embeddings(seen_path)
    pairs = make_mapping_pairs(space, specialized_seen)
    generator = train_post_specializer(pairs, cfg.post)
    ckpt = os.path.join(cfg.output_dir, GENERATOR_CKPT)
    save_checkpoint(generator, ckpt)
    write_sidecar(ckpt, cfg_hash, cfg.seed)
    summary = {"checkpoint": ckpt, "pairs": len(pairs), "mode": cfg.post.mode}
    log.info(kv_line(event="stage_postspec_done", **summary))
    return summary


def stage_map(cfg: PipelineConfig, cfg_hash: str) -> dict:
    """Apply the trained generator to the full vocabulary."""
    cfg.validate_paths()
    seen_path = os.path.join(cfg.output_dir, SPECIALIZED_SEEN)
    ckpt = os.path.join(cfg.output_dir, GENERATOR_CKPT)
    for path in (seen_path, ckpt):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing earlier stage output: {path}")
    space = load_embeddings(cfg.vectors, cfg.header_policy)
    specialized_seen = load_embeddings(seen_path)
    generator = load_checkpoint(ckpt)
    seen = SeenVocab(frozenset(specialized_seen.words))
    mapped = apply_global_mapping(space, generator, seen, specialized_seen, cfg.post.map_policy)
    out_path = os.path.join(cfg.output_dir, SPECIALIZED_ALL)
    save_embeddings(mapped, out_path, with_header=True)
    write_sidecar(out_path, cfg_hash, cfg.seed)
    summary = {"output": out_path, "words": len(mapped), "policy": cfg.post.map_policy}
    log.info(kv_line(event="stage_map_done", **summary))
    return summary


def evaluate_space_file(vectors_path, dataset_specs, header_policy: str = "auto") -> list[dict]:
    """Similarity reports for a vectors file over dataset specs
    (format, path, score_column) triples."""
    space = load_embeddings(vectors_path, header_policy)
    reports = []
    for fmt, path, column in dataset_specs:
        ds = load_similarity_dataset(path, fmt, score_column=column)
        report = dict(evaluate_similarity(space, ds))
        report["dataset"] = ds.name
        reports.append(report)
    return reports


def stage_evaluate(cfg: PipelineConfig, cfg_hash: str, vectors_path: str | None = None) -> list[dict]:
    """Evaluate the mapped space (or an explicit file) on the configured
    datasets; writes the row-per-dataset TSV."""
    target = vectors_path or os.path.join(cfg.output_dir, SPECIALIZED_ALL)
    if not os.path.exists(target):
        raise FileNotFoundError(f"nothing to evaluate: {target}")
    reports = evaluate_space_file(target, cfg.eval_datasets, cfg.header_policy)
    os.makedirs(cfg.output_dir, exist_ok=True)
    tsv = os.path.join(cfg.output_dir, REPORT_TSV)
    with open(tsv, "w", encoding="utf-8") as handle:
        handle.write("dataset\trho\tpairs_used\tpairs_total\tcoverage\n")
        for r in reports:
            handle.write(
                f"{r['dataset']}\t{r['rho']:.6f}\t{r['pairs_used']}\t{r['pairs_total']}\t{r['coverage']:.6f}\n"
            )
    write_sidecar(tsv, cfg_hash, cfg.seed)
    return reports


def run_pipeline(cfg: PipelineConfig, cfg_hash: str) -> dict:
    """All stages in order; returns their summaries."""
    result = {"specialize": stage_specialize(cfg, cfg_hash)}
    result["postspec"] = stage_postspec(cfg, cfg_hash)
    result["map"] = stage_map(cfg, cfg_hash)
    if cfg.eval_datasets:
        result["evaluate"] = stage_evaluate(cfg, cfg_hash)
    return result


def write_synth_fixture(kind: str, out_dir: str, seed: int, **params) -> dict:
    """Emit a synthetic task as standard files.

    cluster: vectors.txt, synonyms.txt, antonyms.txt, benchmark.txt.
    linear: vectors.txt, targets.txt, rotation.txt.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = {}
    if kind == "cluster":
        task = make_cluster_task(
            n_clusters=int(params.get("clusters", 4)),
            words_per_cluster=int(params.get("words_per_cluster", 5)),
            dim=int(params.get("dim", 16)),
            noise=float(params.get("noise", 0.1)),
            seed=seed,
        )
        vectors = os.path.join(out_dir, "vectors.txt")
        save_embeddings(task.space, vectors)
        written["vectors"] = vectors
        for relation, pairs in (
            ("synonyms", task.constraints.synonyms),
            ("antonyms", task.constraints.antonyms),
        ):
            path = os.path.join(out_dir, f"{relation}.txt")
            with open(path, "w", encoding="utf-8") as handle:
                for a, b in sorted(pairs):
                    handle.write(f"{a} {b}\n")
            written[relation] = path
        bench = planted_benchmark(task)
        bench_path = os.path.join(out_dir, "benchmark.txt")
        with open(bench_path, "w", encoding="utf-8") as handle:
            for w1, w2, score in bench.records:
                handle.write(f"{w1} {w2} {score:.1f}\n")
        written["benchmark"] = bench_path
    elif kind == "linear":
        task = make_linear_task(
            n_words=int(params.get("words", 500)),
            dim=int(params.get("dim", 16)),
            seed=seed,
        )
        vectors = os.path.join(out_dir, "vectors.txt")
        save_embeddings(task.space, vectors)
        targets = VectorSpace(list(task.space.words), task.space.matrix @ task.truth.T)
        targets_path = os.path.join(out_dir, "targets.txt")
        save_embeddings(targets, targets_path)
        rotation = os.path.join(out_dir, "rotation.txt")
        with open(rotation, "w", encoding="utf-8") as handle:
            for row in task.truth:
                handle.write(" ".join("%.17g" % v for v in row) + "\n")
        written = {"vectors": vectors, "targets": targets_path, "rotation": rotation}
    else:
        raise ValidationError(f"unknown fixture kind {kind!r}")
    log.info(kv_line(event="synth_written", kind=kind, out_dir=out_dir, seed=seed))
    return written
