"""``genlink`` command line: build artifacts, train, link, evaluate."""

from __future__ import annotations

import argparse
import json
import logging
import multiprocessing
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import artifacts
from .alias import AliasTable, build_alias_table
from .codec import SEPARATOR, RenderMode, tokenize
from .corpus import (
    DEFAULT_MAX_INPUT_TOKENS,
    align_hyperlinks,
    load_mentions,
    read_hyperlinks,
    read_redirects,
    training_pairs,
    write_mentions,
)
from .decoding import DEFAULT_BEAMS, DEFAULT_LENGTH_PENALTY, DEFAULT_MAX_STEPS, BeamConfig
from .errors import GenlinkError, MentionTooLong, NoHypotheses
from .evaluation import (
    CANDIDATE_COUNT_EDGES,
    ENTITY_FREQUENCY_EDGES,
    MENTION_FREQUENCY_EDGES,
    BucketSpec,
    EvalReport,
    accuracy,
    bucket_report,
    buckets_to_json,
    buckets_to_text,
    candidate_count,
    entity_frequency,
    mention_frequency,
    training_frequencies,
)
from .kb import WIKIMEDIA_FILTER_CLASSES, KnowledgeBase, ingest_kb, read_filter_list, read_kb_jsonl
from .ranking import DEFAULT_ALPHA, LinkConfig, link
from .scorer import ReferenceScorer
from .trie import build_from_kb, deserialize

log = logging.getLogger("genlink")


class CliError(Exception):
    """A user-facing failure with a one-line message."""


def _open_text(path):
    try:
        return open(path, encoding="utf-8")
    except FileNotFoundError:
        raise CliError(f"file not found: {path}") from None


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError:
        raise CliError(f"file not found: {path}") from None


def _load_kb(path) -> KnowledgeBase:
    return artifacts.load_kb(_read_bytes(path), str(path))


def _load_trie(path):
    return deserialize(_read_bytes(path))


def _load_alias(path) -> AliasTable:
    with _open_text(path) as f:
        return AliasTable.read_jsonl(f)


def _write_json_line(out, obj):
    out.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")


def kb_alphabet(kb: KnowledgeBase, mode: RenderMode) -> set[int]:
    """Every token that can occur in an identifier of ``kb`` under ``mode``."""
    chars = set()
    for rec in kb.entities.values():
        for name in rec.names.values():
            chars.update(name)
        for alts in rec.redirects.values():
            for alt in alts:
                chars.update(alt)
        if mode is not RenderMode.CANONICAL:
            for lang in rec.names:
                chars.update(lang)
    if mode is not RenderMode.CANONICAL:
        chars.update(SEPARATOR)
    return set(tokenize("".join(sorted(chars))))


# -- commands ------------------------------------------------------------------------


def cmd_build_kb(args):
    with _open_text(args.input) as f:
        records, memberships = read_kb_jsonl(f)
    if args.filter:
        with _open_text(args.filter) as f:
            excluded = read_filter_list(f)
    else:
        excluded = WIKIMEDIA_FILTER_CLASSES
    kb = ingest_kb(records, excluded, memberships)
    artifacts.write_bytes(args.out, artifacts.dump_kb(kb))
    log.info("kb: %d of %d records kept, %d languages", len(kb), len(records), len(kb.languages()))


def cmd_build_trie(args):
    kb = _load_kb(args.kb)
    trie = build_from_kb(kb, args.mode, args.redirects)
    artifacts.save_trie(trie, args.out)
    log.info("trie: %d identifiers, %d nodes", trie.name_count, trie.node_count)


def cmd_build_alias(args):
    kb = _load_kb(args.kb)
    train = load_mentions(args.mentions)
    labels = []
    if args.labels:
        with _open_text(args.labels) as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                parts = line.rstrip("\r\n").split("\t")
                if len(parts) != 2:
                    raise CliError(f"{args.labels}:{lineno}: expected 'label<TAB>entity_id'")
                labels.append((parts[0], parts[1]))
    missing = [m for m in train if m.gold is None]
    if missing:
        raise CliError(f"{args.mentions}: {len(missing)} training mentions lack a gold entity")
    table = build_alias_table(((m.mention, m.gold) for m in train), kb, labels)
    with open(args.out, "w", encoding="utf-8") as f:
        table.write_jsonl(f)
    log.info("alias table: %d mention strings", len(table))


def cmd_align(args):
    kb = _load_kb(args.kb)
    redirect_map = {}
    if args.redirects:
        with _open_text(args.redirects) as f:
            redirect_map = read_redirects(f)
    with _open_text(args.links) as f:
        aligned, stats = align_hyperlinks(read_hyperlinks(f), kb, redirect_map)
    with open(args.out, "w", encoding="utf-8") as f:
        write_mentions(aligned, f)
    sys.stderr.write(json.dumps(stats.as_dict(), sort_keys=True) + "\n")


def cmd_make_pairs(args):
    kb = _load_kb(args.kb)
    mode = RenderMode.parse(args.mode)
    train = load_mentions(args.mentions)
    pairs = list(training_pairs(train, kb, mode, args.seed, args.max_input))
    artifacts.write_bytes(args.out, artifacts.dump_pairs(pairs, mode.value, args.seed, kb_alphabet(kb, mode)))
    log.info("pairs: %d from %d mentions", len(pairs), len(train))


def cmd_train_scorer(args):
    pairs, meta = artifacts.load_pairs(_read_bytes(args.pairs), str(args.pairs))
    scorer = ReferenceScorer(args.lambda_copy, args.add_k, args.copy_smoothing)
    scorer.fit(pairs, extra_vocab=meta["alphabet"])
    artifacts.write_bytes(args.out, artifacts.dump_scorer(scorer))
    log.info("scorer: vocabulary of %d tokens from %d pairs", len(scorer.vocab_), len(pairs))


# link workers share read-only state set up once per process
_STATE: dict = {}


def _init_worker(kb, trie, alias, scorer, cfg):
    _STATE.update(kb=kb, trie=trie, alias=alias, scorer=scorer, cfg=cfg)


def _link_record(item):
    index, inst = item
    cfg = _STATE["cfg"]
    rec = {
        "index": index,
        "mode": cfg.mode.value,
        "candidates": cfg.use_candidates,
        "marginalize": cfg.use_marginalization,
    }
    try:
        result = link(inst, _STATE["kb"], _STATE["trie"], _STATE["alias"], _STATE["scorer"], cfg)
    except (NoHypotheses, MentionTooLong) as exc:
        rec.update(qid=None, score=None, supporting=[], ranking=[], error=str(exc))
        return rec
    best = result.ranking[0]
    rec.update(
        qid=result.prediction,
        score=best.score,
        supporting=[{"identifier": i, "logprob": lp, "length": n} for i, lp, n in best.supporting],
        ranking=[{"qid": s.entity, "score": s.score} for s in result.ranking[:5]],
    )
    return rec


def cmd_link(args):
    if args.top_k is not None and not args.alias:
        raise CliError("--top-k needs --alias")
    if args.threads < 1:
        raise CliError("--threads must be positive")
    kb = _load_kb(args.kb)
    trie = _load_trie(args.trie)
    scorer = artifacts.load_scorer(_read_bytes(args.scorer), str(args.scorer))
    alias = _load_alias(args.alias) if args.alias else None
    cfg = LinkConfig(
        mode=trie.mode or RenderMode.NAME_FIRST,
        use_candidates=alias is not None,
        use_marginalization=args.marginalize,
        alpha=args.alpha,
        beam=BeamConfig(args.beams, args.lenpen, args.max_steps),
        top_k=args.top_k,
        max_input_tokens=args.max_input,
    )
    instances = load_mentions(args.input)
    items = list(enumerate(instances))
    state = (kb, trie, alias, scorer, cfg)
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    failed = 0
    pool = None
    try:
        if args.threads == 1:
            _init_worker(*state)
            records = map(_link_record, items)
        else:
            ctx = multiprocessing.get_context("fork")
            pool = ProcessPoolExecutor(args.threads, mp_context=ctx, initializer=_init_worker, initargs=state)
            # Executor.map yields in submission order, whatever finishes first
            records = pool.map(_link_record, items, chunksize=max(1, len(items) // (4 * args.threads)))
        for rec in records:
            failed += rec["qid"] is None
            _write_json_line(out, rec)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
        if out is not sys.stdout:
            out.close()
    log.info("linked %d mentions (%d without prediction)", len(items), failed)


def _read_preds(path) -> list:
    preds = []
    with _open_text(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                preds.append((int(rec.get("index", len(preds))), rec["qid"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise CliError(f"{path}:{lineno}: not a prediction record") from None
    preds.sort(key=lambda p: p[0])
    if [i for i, _ in preds] != list(range(len(preds))):
        raise CliError(f"{path}: prediction indices are not 0..n-1")
    return [q for _, q in preds]


def cmd_eval(args):
    gold = load_mentions(args.gold)
    preds = _read_preds(args.preds)
    if len(preds) != len(gold):
        raise CliError(f"{len(preds)} predictions for {len(gold)} gold mentions")
    pairs = list(zip(gold, preds))
    report: EvalReport = accuracy(pairs)
    buckets = None
    if args.buckets in ("entity", "mention"):
        if not args.train:
            raise CliError(f"--buckets {args.buckets} needs --train")
        entity_counts, mention_counts = training_frequencies(load_mentions(args.train))
        if args.buckets == "entity":
            buckets = bucket_report(pairs, entity_frequency(entity_counts), BucketSpec(ENTITY_FREQUENCY_EDGES))
        else:
            buckets = bucket_report(pairs, mention_frequency(mention_counts), BucketSpec(MENTION_FREQUENCY_EDGES))
    elif args.buckets == "candidates":
        if not args.alias:
            raise CliError("--buckets candidates needs --alias")
        buckets = bucket_report(pairs, candidate_count(_load_alias(args.alias)), BucketSpec(CANDIDATE_COUNT_EDGES))

    if args.format == "json":
        obj = report.to_json()
        if buckets is not None:
            obj["buckets"] = {"key": args.buckets, "bins": buckets_to_json(buckets)}
        text = json.dumps(obj, indent=2, sort_keys=True)
    else:
        text = report.to_text()
        if buckets is not None:
            text += f"\n\nby {args.buckets}\n" + buckets_to_text(buckets)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def cmd_stats(args):
    data = _read_bytes(args.trie)
    trie = deserialize(data)
    stats = dict(trie.stats())
    stats.update(
        bytes=len(data),
        mode=trie.mode.value if trie.mode else None,
        include_redirects=trie.include_redirects,
        entities=len(trie.entities),
        languages=len(trie.langs),
    )
    sys.stdout.write(json.dumps(stats, sort_keys=True) + "\n")


# -- parser ------------------------------------------------------------------------


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def _non_negative_float(s):
    v = float(s)
    if not v >= 0.0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="genlink", description="Generative multilingual entity linking.")
    ap.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    modes = [m.value for m in RenderMode]

    p = sub.add_parser("build-kb", help="ingest and filter a KB JSONL dump")
    p.add_argument("--in", dest="input", required=True, help="KB JSONL")
    p.add_argument("--filter", help="excluded class ids, one per line (default: built-in Wikimedia list)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_kb)

    p = sub.add_parser("build-trie", help="build the identifier trie")
    p.add_argument("--kb", required=True)
    p.add_argument("--mode", choices=modes, default=RenderMode.NAME_FIRST.value)
    p.add_argument("--redirects", action="store_true", help="add redirect titles as identifiers")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_trie)

    p = sub.add_parser("build-alias", help="build the mention alias table")
    p.add_argument("--mentions", required=True, help="training mentions TSV")
    p.add_argument("--kb", required=True)
    p.add_argument("--labels", help="extra 'label<TAB>entity_id' lines")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_alias)

    p = sub.add_parser("align", help="attach KB entities to raw hyperlinks")
    p.add_argument("--links", required=True, help="hyperlinks TSV")
    p.add_argument("--kb", required=True)
    p.add_argument("--redirects", help="redirects TSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("make-pairs", help="build scorer training pairs")
    p.add_argument("--mentions", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--mode", choices=modes, default=RenderMode.NAME_FIRST.value)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--max-input", type=_positive_int, default=DEFAULT_MAX_INPUT_TOKENS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_pairs)

    p = sub.add_parser("train-scorer", help="train the reference scorer")
    p.add_argument("--pairs", required=True)
    p.add_argument("--lambda-copy", type=float, default=0.5)
    p.add_argument("--add-k", type=float, default=1.0)
    p.add_argument("--copy-smoothing", type=_non_negative_float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_scorer)

    p = sub.add_parser("link", help="link mentions")
    p.add_argument("--kb", required=True)
    p.add_argument("--trie", required=True)
    p.add_argument("--scorer", required=True)
    p.add_argument("--alias", help="restrict decoding to alias-table candidates")
    p.add_argument("--top-k", type=_positive_int)
    p.add_argument("--marginalize", action="store_true")
    p.add_argument("--alpha", type=_non_negative_float, default=DEFAULT_ALPHA)
    p.add_argument("--beams", type=_positive_int, default=DEFAULT_BEAMS)
    p.add_argument("--lenpen", type=_non_negative_float, default=DEFAULT_LENGTH_PENALTY)
    p.add_argument("--max-steps", type=_positive_int, default=DEFAULT_MAX_STEPS)
    p.add_argument("--max-input", type=_positive_int, default=DEFAULT_MAX_INPUT_TOKENS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--in", dest="input", required=True, help="mentions TSV")
    p.add_argument("--out", default="-", help="predictions JSONL (default: stdout)")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--preds", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--buckets", choices=("entity", "mention", "candidates"))
    p.add_argument("--train", help="training mentions TSV (entity and mention buckets)")
    p.add_argument("--alias", help="alias table (candidate buckets)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="print trie statistics as JSON")
    p.add_argument("--trie", required=True)
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr, level=logging.WARNING if args.quiet else logging.INFO, format="genlink: %(message)s", force=True
    )
    try:
        args.func(args)
    except (CliError, GenlinkError, ValueError, OSError) as exc:
        sys.stderr.write(f"genlink {args.command}: error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
