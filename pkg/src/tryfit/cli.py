"""Command-line surface.

Subcommands:

* ``serve``  — run the REST service.
* ``ingest`` — build a catalog file pair from images plus a captions file.
* ``match``  — rank catalog garments for a text query.
* ``edit``   — one-shot pipeline run on a person image.
* ``eval``   — print a PSNR/SSIM table for paired images.

Commands exit 0 on success; on failure they print one machine-readable
``error: <Code>: <message>`` line to stderr and exit 1.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import catalog as catalog_store
from .backends.base import build_stack, mock_stack
from .config import load_config
from .errors import TryFitError
from .imaging import load_png, psnr, save_png, ssim
from .pipeline import Pipeline, new_session, trace_to_dict
from .prompting import default_template, load_template


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tryfit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the REST service")
    serve.add_argument("--config", help="path to a JSON config file")

    ingest = sub.add_parser("ingest", help="build a catalog from images and captions")
    ingest.add_argument("--images", required=True, help="directory of garment PNGs")
    ingest.add_argument("--captions", required=True,
                        help="TSV file: filename<TAB>category<TAB>caption")
    ingest.add_argument("--out", required=True, help="output directory for the catalog pair")

    match = sub.add_parser("match", help="rank catalog garments for a query")
    match.add_argument("--catalog", required=True, help="catalog directory")
    match.add_argument("--query", required=True)
    match.add_argument("--k", type=int, default=5)

    edit = sub.add_parser("edit", help="run one instruction against a person image")
    edit.add_argument("--person", required=True, help="person PNG")
    edit.add_argument("--instruction", required=True)
    edit.add_argument("--out", required=True, help="output PNG path")
    edit.add_argument("--seed", type=int, default=None)
    edit.add_argument("--mock", action="store_true",
                      help="force the all-mock model stack (fully offline)")
    edit.add_argument("--catalog", default=None, help="catalog directory (optional)")
    edit.add_argument("--config", default=None, help="JSON config for backend endpoints")
    edit.add_argument("--trace", default=None, help="also write the trace JSON here")

    ev = sub.add_parser("eval", help="PSNR/SSIM table over paired images")
    ev.add_argument("--pairs", required=True,
                    help="directory of pairs named <stem>_a.png / <stem>_b.png")

    return parser


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(args.config)
    app = create_app(config)
    host, port = config.host_port()
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def _cmd_ingest(args) -> int:
    config = load_config(None)
    stack = build_stack(config.backends)
    built = catalog_store.ingest(args.images, args.captions, stack.embedder)
    catalog_store.save(built, args.out)
    print(f"ingested {len(built)} garments (dim {built.embedding_dim}) into {args.out}")
    return 0


def _cmd_match(args) -> int:
    config = load_config(None)
    stack = build_stack(config.backends)
    loaded = catalog_store.load(args.catalog)
    ranked = catalog_store.search(loaded, args.query, args.k, stack.embedder)
    for garment_id, score in ranked:
        rec = loaded.get(garment_id)
        caption = rec.caption if rec else ""
        print(f"{garment_id}\t{score:.6f}\t{caption}")
    return 0


def _cmd_edit(args) -> int:
    config = load_config(args.config)
    if args.mock:
        stack = mock_stack()
        tau = config.tau if config.tau is not None else 0.50
    else:
        stack = build_stack(config.backends)
        tau = config.resolved_tau()
    if args.catalog:
        loaded = catalog_store.load(args.catalog)
    elif args.mock:
        # Offline default: the packaged fixture catalog, so both routing
        # branches stay reachable without any setup.
        from . import fixtures

        loaded = catalog_store.ingest(
            fixtures.catalog_images_dir(), fixtures.captions_path(), stack.embedder
        )
    else:
        loaded = None
    pipeline = Pipeline(
        stack=stack,
        catalog=loaded,
        template=default_template(),
        tau=tau,
    )
    session = new_session("cli-edit")
    person = load_png(args.person)
    result = pipeline.handle_message(session, args.instruction,
                                     person_image=person, seed=args.seed)
    if result.trace.outcome != "edited":
        print(f"error: {result.trace.error_code or result.trace.outcome}: {result.reply}",
              file=sys.stderr)
        return 1
    save_png(result.image, args.out)
    if args.trace:
        Path(args.trace).write_text(
            json.dumps(trace_to_dict(result.trace), indent=2) + "\n", encoding="utf-8"
        )
    print(f"wrote {args.out} ({result.trace.outcome}); reply: {result.reply}")
    return 0


def _cmd_eval(args) -> int:
    pairs_dir = Path(args.pairs)
    stems = sorted(
        p.name[: -len("_a.png")]
        for p in pairs_dir.glob("*_a.png")
        if (pairs_dir / f"{p.name[:-len('_a.png')]}_b.png").is_file()
    )
    if not stems:
        print("error: NoPairs: no <stem>_a.png / <stem>_b.png pairs found", file=sys.stderr)
        return 1
    print("pair\tpsnr_db\tssim")
    for stem in stems:
        a = load_png(pairs_dir / f"{stem}_a.png")
        b = load_png(pairs_dir / f"{stem}_b.png")
        p = psnr(a, b)
        s = ssim(a, b)
        p_str = "Infinite" if math.isinf(p) else f"{p:.4f}"
        print(f"{stem}\t{p_str}\t{s:.6f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "ingest": _cmd_ingest,
        "match": _cmd_match,
        "edit": _cmd_edit,
        "eval": _cmd_eval,
    }
    try:
        return handlers[args.command](args)
    except TryFitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
