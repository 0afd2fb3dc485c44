"""Command-line entry point.

Subcommands map 1:1 onto the library operations: ``ingest`` (KB -> inventory),
``build-trie``, ``link``, ``fuse``, ``cv-memory``, ``eval``, and ``report``.
Every option can also come from a flat key=value config file with one
``[subcommand]`` section per command; explicit flags override the file. Each
run logs an effective-config block to stderr that can be fed back via
``--config`` to reproduce the run exactly.

Exit codes: 0 success, 1 partial failure (some mentions failed but outputs
were written), 2 configuration or input error.

The literal path value ``toy`` resolves to the bundled fixture KB or corpus.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from . import __version__
from .cv_memory import (
    build_robust_memory,
    export_training_set,
    held_out_linker_factory,
    partition_folds,
    write_fold_plan,
)
from .decoding import DecodeConfig
from .documents import CorpusFormatError, read_corpus
from .evaluation import (
    EvalConfig,
    SubsetLabeler,
    cwme,
    delta_cwme,
    predictions_index,
    subset_breakdown,
)
from .fusion import FusionConfig, MissingVariantError, ensemble_predictions
from .kb import (
    KBFormatError,
    filter_unambiguous,
    load_kb,
    read_inventory_tsv,
    write_exclusions_tsv,
    write_inventory_tsv,
)
from .linker import (
    MemoryEntry,
    VariantConfig,
    lexical_factory,
    link_corpus,
    link_document,
    memory_echo_factory,
    uniform_factory,
)
from .predictions import (
    PredictionFormatError,
    read_predictions,
    write_predictions,
)
from .report import (
    render_figures,
    write_delta_cwme_tsv,
    write_report_text,
    write_report_tsv,
)
from .trie import TrieArchiveError, TrieSet

_SENTINEL = object()


class ConfigError(ValueError):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


@dataclass(frozen=True)
class Opt:
    dest: str
    type: Callable[[str], Any]
    default: Any
    help: str
    choices: tuple | None = None

    @property
    def flag(self) -> str:
        return "--" + self.dest.replace("_", "-")

    def format_value(self, value: Any) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, tuple):
            return ",".join(str(v) for v in value)
        return str(value)


_DECODE_OPTS = [
    Opt("beam_width", int, 5, "beam width for constrained decoding"),
    Opt("top_k", int, 5, "candidates kept per mention (<= beam width)"),
    Opt("max_steps", int, None, "token cap per decode (default: longest target)"),
    Opt("length_penalty", float, 0.0, "score divided by length**penalty"),
]

_SCORER_OPTS = [
    Opt(
        "scorer",
        str,
        "lexical",
        "token scorer driving the beam",
        choices=("lexical", "uniform", "external"),
    ),
    Opt("memory_echo_boost", float, 0.0, "log-score bonus toward remembered targets"),
    Opt("adapter_cmd", str, None, "external adapter command ({fingerprint}, {vocab_size} substituted)"),
    Opt("adapter_host", str, None, "external adapter TCP host"),
    Opt("adapter_port", int, None, "external adapter TCP port"),
]

OPTIONS: dict[str, list[Opt]] = {
    "ingest": [
        Opt("kb", str, None, "KB TSV file ('toy' for the bundled fixture)"),
        Opt("inventory_out", str, None, "inventory TSV output path"),
        Opt("exclusions_out", str, None, "exclusion report TSV output path"),
    ],
    "build-trie": [
        Opt("inventory", str, None, "inventory TSV from ingest"),
        Opt("out_dir", str, None, "directory for trie archives + tokenizer"),
    ],
    "link": [
        Opt("corpus", str, None, "corpus JSONL ('toy' for the bundled fixture)"),
        Opt("tries", str, None, "trie directory from build-trie"),
        Opt("out", str, None, "prediction file output path"),
        Opt(
            "variant",
            str,
            "local",
            "input configuration",
            choices=("local", "global", "memory", "global+memory"),
        ),
        Opt(
            "memory_source",
            str,
            "self",
            "where memory entries come from",
            choices=("self", "gold", "external"),
        ),
        Opt("memory_file", str, None, "external memory JSONL (memory_source=external)"),
        Opt("inventory", str, None, "inventory TSV (needed for memory_source=gold)"),
        Opt("memory_capacity", int, None, "cap on memory entries (oldest dropped)"),
        Opt("workers", int, 1, "cross-document parallelism"),
        *_SCORER_OPTS,
        *_DECODE_OPTS,
    ],
    "fuse": [
        Opt("pred_local", str, None, "local-variant prediction file"),
        Opt("pred_global", str, None, "global-variant prediction file"),
        Opt("pred_memory", str, None, "memory-variant prediction file"),
        Opt("pred_global_memory", str, None, "global+memory prediction file"),
        Opt("out", str, None, "fused prediction file output path"),
        Opt("rrf_k", float, 60.0, "rank offset constant"),
        Opt("top_k_out", int, None, "fused candidates kept per mention"),
    ],
    "cv-memory": [
        Opt("corpus", str, None, "training corpus JSONL ('toy' for the fixture)"),
        Opt("tries", str, None, "trie directory"),
        Opt("inventory", str, None, "inventory TSV (target selection)"),
        Opt("out", str, None, "training set JSONL output path"),
        Opt("fold_plan_out", str, None, "fold plan TSV output path"),
        Opt("n_folds", int, 5, "number of folds"),
        Opt("seed", int, 0, "fold shuffle seed"),
        Opt(
            "variant",
            str,
            "global+memory",
            "prompt configuration for training records",
            choices=("local", "global", "memory", "global+memory"),
        ),
        Opt(
            "provenance",
            str,
            "out-of-fold",
            "memory content for prompts",
            choices=("out-of-fold", "gold"),
        ),
        Opt(
            "scorer",
            str,
            "lexical",
            "scorer for the held-out prediction passes",
            choices=("lexical", "uniform"),
        ),
        Opt("workers", int, 1, "cross-document parallelism for prediction passes"),
        *_DECODE_OPTS,
    ],
    "eval": [
        Opt("predictions", str, None, "prediction file to score"),
        Opt("corpus", str, None, "gold corpus JSONL ('toy' for the fixture)"),
        Opt("kb", str, None, "KB TSV for surface-match rows ('toy' allowed)"),
        Opt("training_ids", str, None, "file of training concept ids (one per line)"),
        Opt("ks", _parse_int_list, (1, 5), "recall cutoffs, comma separated"),
        Opt("bootstrap_b", int, 1000, "bootstrap resample count"),
        Opt("bootstrap_seed", int, 0, "bootstrap seed"),
        Opt("ci_level", float, 0.95, "confidence level"),
        Opt("report_out", str, None, "subset table TSV output path"),
        Opt("text_out", str, None, "human-readable report output path"),
    ],
    "report": [
        Opt("predictions", str, None, "prediction file to score"),
        Opt("baseline_predictions", str, None, "second prediction file for CWME deltas"),
        Opt("corpus", str, None, "gold corpus JSONL ('toy' for the fixture)"),
        Opt("kb", str, None, "KB TSV for surface-match rows ('toy' allowed)"),
        Opt("training_ids", str, None, "file of training concept ids (one per line)"),
        Opt("ks", _parse_int_list, (1, 5), "recall cutoffs, comma separated"),
        Opt("bootstrap_b", int, 1000, "bootstrap resample count"),
        Opt("bootstrap_seed", int, 0, "bootstrap seed"),
        Opt("ci_level", float, 0.95, "confidence level"),
        Opt("out_dir", str, None, "report directory (tables + figures)"),
    ],
}

_REQUIRED: dict[str, tuple[str, ...]] = {
    "ingest": ("kb", "inventory_out"),
    "build-trie": ("inventory", "out_dir"),
    "link": ("corpus", "tries", "out"),
    "fuse": ("out",),
    "cv-memory": ("corpus", "tries", "inventory", "out"),
    "eval": ("predictions", "corpus", "report_out"),
    "report": ("predictions", "corpus", "out_dir"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doclink",
        description="Document-level entity linking over a knowledge base.",
    )
    parser.add_argument("--version", action="version", version=f"doclink {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, opts in OPTIONS.items():
        sp = sub.add_parser(name, help=f"{name} options")
        sp.add_argument("--config", default=None, help="flat key=value config file")
        for opt in opts:
            kwargs: dict[str, Any] = {
                "dest": opt.dest,
                "default": _SENTINEL,
                "help": opt.help,
            }
            if opt.choices:
                kwargs["choices"] = opt.choices
                kwargs["type"] = str
            else:
                kwargs["type"] = opt.type
            sp.add_argument(opt.flag, **kwargs)
    return parser


def _load_config_section(path: str, section: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    read = cp.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if not cp.has_section(section):
        return {}
    return dict(cp.items(section))


def resolve_options(args: argparse.Namespace) -> dict[str, Any]:
    """Merge precedence: explicit flag > config file > built-in default."""
    opts = OPTIONS[args.subcommand]
    file_values: dict[str, str] = {}
    if args.config:
        file_values = _load_config_section(args.config, args.subcommand)
        known = {o.dest for o in opts}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigError(
                f"unknown config keys in [{args.subcommand}]: {', '.join(sorted(unknown))}"
            )
    resolved: dict[str, Any] = {}
    for opt in opts:
        cli_value = getattr(args, opt.dest)
        if cli_value is not _SENTINEL:
            resolved[opt.dest] = cli_value
        elif opt.dest in file_values:
            try:
                resolved[opt.dest] = opt.type(file_values[opt.dest])
            except ValueError as exc:
                raise ConfigError(
                    f"bad config value for {opt.dest}: {file_values[opt.dest]!r} ({exc})"
                ) from exc
        else:
            resolved[opt.dest] = opt.default
    for dest in _REQUIRED[args.subcommand]:
        if resolved[dest] is None:
            raise ConfigError(f"missing required option --{dest.replace('_', '-')}")
    return resolved


def log_effective_config(subcommand: str, resolved: dict[str, Any]) -> None:
    print("# --- effective config (reusable via --config) ---", file=sys.stderr)
    print(f"[{subcommand}]", file=sys.stderr)
    for opt in OPTIONS[subcommand]:
        value = resolved[opt.dest]
        if value is None:
            continue
        print(f"{opt.dest}={opt.format_value(value)}", file=sys.stderr)
    print("# --- end effective config ---", file=sys.stderr)


def _resolve_fixture(path: str, kind: str) -> Path:
    if path == "toy":
        from .fixtures import toy_corpus_path, toy_kb_path

        return toy_kb_path() if kind == "kb" else toy_corpus_path()
    return Path(path)


def _require_file(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _outpath(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _decode_config(o: dict[str, Any]) -> DecodeConfig:
    return DecodeConfig(
        beam_width=o["beam_width"],
        top_k=o["top_k"],
        max_steps=o["max_steps"],
        length_penalty=o["length_penalty"],
    )


def _scorer_factory(o: dict[str, Any], trie_set: TrieSet):
    """Returns (scorer factory, cleanup callable)."""
    base = lexical_factory if o["scorer"] == "lexical" else uniform_factory
    cleanup = lambda: None
    if o["scorer"] == "external":
        from .remote import AdapterClient, remote_factory

        fingerprint = trie_set.fingerprint()
        vocab_size = trie_set.tokenizer.vocab_size
        if o["adapter_cmd"]:
            cmd = o["adapter_cmd"].replace("{fingerprint}", fingerprint).replace(
                "{vocab_size}", str(vocab_size)
            )
            client = AdapterClient.spawn(cmd, fingerprint, vocab_size)
        elif o["adapter_host"] and o["adapter_port"]:
            client = AdapterClient.connect(
                o["adapter_host"], o["adapter_port"], fingerprint, vocab_size
            )
        else:
            raise ConfigError(
                "scorer=external needs --adapter-cmd or --adapter-host/--adapter-port"
            )
        base = remote_factory(client)
        cleanup = client.close
    if o["memory_echo_boost"] > 0.0:
        return memory_echo_factory(base, o["memory_echo_boost"]), cleanup
    return base, cleanup


def _read_external_memory(path: Path) -> dict[tuple[str, int], MemoryEntry]:
    entries: dict[tuple[str, int], MemoryEntry] = {}
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            entries[(obj["doc_id"], obj["mention_index"])] = MemoryEntry(
                surface=obj["surface"],
                target=obj["target"],
                concept_id=obj["concept_id"],
            )
    return entries


def cmd_ingest(o: dict[str, Any]) -> int:
    kb_path = _require_file(_resolve_fixture(o["kb"], "kb"), "KB file")
    kb = load_kb(kb_path)
    inventory = filter_unambiguous(kb)
    write_inventory_tsv(inventory, _outpath(o["inventory_out"]))
    exclusions_out = o["exclusions_out"] or (o["inventory_out"] + ".exclusions.tsv")
    write_exclusions_tsv(inventory, _outpath(exclusions_out))
    print(
        f"ingested {len(kb.concepts)} concepts / {kb.synonym_count()} synonyms / "
        f"{len(kb.groups)} groups; {len(inventory.entries)} inventory entries, "
        f"{len(inventory.excluded_concepts)} concepts excluded",
        file=sys.stderr,
    )
    return 0


def cmd_build_trie(o: dict[str, Any]) -> int:
    inventory = read_inventory_tsv(_require_file(Path(o["inventory"]), "inventory"))
    trie_set = TrieSet.build(inventory)
    trie_set.save(o["out_dir"])
    sizes = {g: t.node_count for g, t in sorted(trie_set.tries.items())}
    print(
        f"built {len(trie_set.tries)} tries (nodes: {sizes}) with tokenizer "
        f"fingerprint {trie_set.fingerprint()[:12]}…",
        file=sys.stderr,
    )
    return 0


def cmd_link(o: dict[str, Any]) -> int:
    corpus = read_corpus(_require_file(_resolve_fixture(o["corpus"], "corpus"), "corpus"))
    trie_set = TrieSet.load(_require_file(Path(o["tries"]), "trie directory"))
    variant = VariantConfig.from_name(o["variant"], memory_source=o["memory_source"])
    inventory = None
    if o["inventory"]:
        inventory = read_inventory_tsv(_require_file(Path(o["inventory"]), "inventory"))
    if variant.use_memory and variant.memory_source == "gold" and inventory is None:
        raise ConfigError("memory_source=gold requires --inventory")
    external_memory = None
    if variant.use_memory and variant.memory_source == "external":
        if not o["memory_file"]:
            raise ConfigError("memory_source=external requires --memory-file")
        external_memory = _read_external_memory(
            _require_file(Path(o["memory_file"]), "memory file")
        )
    factory, cleanup = _scorer_factory(o, trie_set)
    started = time.perf_counter()
    try:
        records, run_report = link_corpus(
            corpus,
            trie_set,
            factory,
            variant,
            _decode_config(o),
            inventory=inventory,
            external_memory=external_memory,
            memory_capacity=o["memory_capacity"],
            workers=o["workers"],
        )
    finally:
        cleanup()
    elapsed = time.perf_counter() - started
    write_predictions(records, _outpath(o["out"]), variant.name)
    rate = run_report.n_mentions / elapsed if elapsed > 0 else float("inf")
    print(
        f"linked {run_report.n_mentions} mentions in {run_report.n_documents} "
        f"documents in {elapsed:.2f}s ({rate:.1f} mentions/s)",
        file=sys.stderr,
    )
    if run_report.failures:
        for doc_id, t, msg in run_report.failures:
            print(f"  failed: {doc_id}[{t}]: {msg}", file=sys.stderr)
        return 1
    return 0


def cmd_fuse(o: dict[str, Any]) -> int:
    sources = {
        "local": o["pred_local"],
        "global": o["pred_global"],
        "memory": o["pred_memory"],
        "global+memory": o["pred_global_memory"],
    }
    missing = sorted(v for v, p in sources.items() if not p)
    if missing:
        raise ConfigError("missing prediction file for variant(s): " + ", ".join(missing))
    runs = {}
    for variant_name, pred_path in sources.items():
        _, records = read_predictions(_require_file(Path(pred_path), "prediction file"))
        runs[variant_name] = records
    fused = ensemble_predictions(
        runs,
        required_variants=tuple(sources),
        config=FusionConfig(k=o["rrf_k"], top_k_out=o["top_k_out"]),
    )
    write_predictions(fused, _outpath(o["out"]), "ensemble")
    print(f"fused {len(fused)} mentions from 4 variants", file=sys.stderr)
    return 0


def cmd_cv_memory(o: dict[str, Any]) -> int:
    corpus = read_corpus(_require_file(_resolve_fixture(o["corpus"], "corpus"), "corpus"))
    trie_set = TrieSet.load(_require_file(Path(o["tries"]), "trie directory"))
    inventory = read_inventory_tsv(_require_file(Path(o["inventory"]), "inventory"))
    plan = partition_folds(corpus, n_folds=o["n_folds"], seed=o["seed"])
    variant = VariantConfig.from_name(o["variant"])
    base = lexical_factory if o["scorer"] == "lexical" else uniform_factory
    config = _decode_config(o)

    def link_one(doc):
        return link_document(
            doc, trie_set, base, variant, config, inventory=inventory
        )

    records, build_report = build_robust_memory(
        corpus,
        plan,
        held_out_linker_factory(link_one),
        inventory,
        variant=variant,
        provenance=o["provenance"],
        workers=o["workers"],
    )
    export_training_set(records, _outpath(o["out"]))
    if o["fold_plan_out"]:
        write_fold_plan(plan, _outpath(o["fold_plan_out"]))
    print(
        f"exported {build_report.n_records} training records "
        f"({len(build_report.skipped)} skipped, "
        f"{build_report.n_predictions} held-out predictions)",
        file=sys.stderr,
    )
    for doc_id, t, msg in build_report.skipped:
        print(f"  skipped: {doc_id}[{t}]: {msg}", file=sys.stderr)
    return 0


def _labeler_from_options(o: dict[str, Any]) -> SubsetLabeler:
    training_ids = None
    if o["training_ids"]:
        path = _require_file(Path(o["training_ids"]), "training ids file")
        training_ids = {
            line.strip() for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        }
    if o["kb"]:
        kb = load_kb(_require_file(_resolve_fixture(o["kb"], "kb"), "KB file"))
        inventory = filter_unambiguous(kb)
        return SubsetLabeler.from_kb(kb, inventory, training_concept_ids=training_ids)
    return SubsetLabeler(training_concept_ids=training_ids)


def _eval_config(o: dict[str, Any]) -> EvalConfig:
    return EvalConfig(
        ks=tuple(o["ks"]),
        bootstrap_B=o["bootstrap_b"],
        bootstrap_seed=o["bootstrap_seed"],
        ci_level=o["ci_level"],
    )


def cmd_eval(o: dict[str, Any]) -> int:
    corpus = read_corpus(_require_file(_resolve_fixture(o["corpus"], "corpus"), "corpus"))
    _, records = read_predictions(
        _require_file(Path(o["predictions"]), "prediction file")
    )
    index = predictions_index(records)
    labeler = _labeler_from_options(o)
    rows = subset_breakdown(index, corpus, labeler, _eval_config(o))
    write_report_tsv(rows, _outpath(o["report_out"]))
    cwme_result = cwme(index, corpus)
    if o["text_out"]:
        write_report_text(rows, _outpath(o["text_out"]), cwme_result=cwme_result)
    overall = next(r for r in rows if r.key == f"recall@{o['ks'][0]}_overall")
    if overall.value is None:
        print("no gold-annotated mentions to evaluate", file=sys.stderr)
        return 0
    hw = f" ± {100 * overall.half_width:.1f}" if overall.half_width is not None else ""
    print(
        f"recall@{o['ks'][0]} = {100 * overall.value:.1f}{hw} "
        f"over {overall.support_n} mentions",
        file=sys.stderr,
    )
    return 0


def cmd_report(o: dict[str, Any]) -> int:
    corpus = read_corpus(_require_file(_resolve_fixture(o["corpus"], "corpus"), "corpus"))
    _, records = read_predictions(
        _require_file(Path(o["predictions"]), "prediction file")
    )
    index = predictions_index(records)
    labeler = _labeler_from_options(o)
    config = _eval_config(o)
    rows = subset_breakdown(index, corpus, labeler, config)
    cwme_result = cwme(index, corpus)
    delta_rows = None
    if o["baseline_predictions"]:
        _, baseline = read_predictions(
            _require_file(Path(o["baseline_predictions"]), "baseline prediction file")
        )
        delta_rows = delta_cwme(index, predictions_index(baseline), corpus)
    out_dir = Path(o["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_tsv(rows, out_dir / "report.tsv")
    write_report_text(
        rows, out_dir / "report.txt", cwme_result=cwme_result, delta_rows=delta_rows
    )
    if delta_rows is not None:
        write_delta_cwme_tsv(delta_rows, out_dir / "delta_cwme.tsv")
    figures = render_figures(rows, out_dir / "figures", delta_rows=delta_rows)
    print(
        f"report written to {out_dir} ({len(rows)} subset rows, "
        f"{len(figures)} figures)",
        file=sys.stderr,
    )
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "build-trie": cmd_build_trie,
    "link": cmd_link,
    "fuse": cmd_fuse,
    "cv-memory": cmd_cv_memory,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = resolve_options(args)
        log_effective_config(args.subcommand, resolved)
        return _COMMANDS[args.subcommand](resolved)
    except (
        ConfigError,
        KBFormatError,
        CorpusFormatError,
        PredictionFormatError,
        TrieArchiveError,
        MissingVariantError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
