"""Command-line interface.

Subcommands: ``analyze``, ``group``, ``train``, ``fit``, ``synth``, ``render``.
Exit codes: 0 success, 2 invalid arguments, 3 IO error, 4 detection infeasible.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from . import analytics
from .config import SynthConfig, config_from_dict, load_config
from .core import dumps, load_sketch, points_to_list, save_sketch, sketch_to_dict, sketch_to_svg, svg_document, svg_paths
from .edges import load_edge_input, render_sketch_edges
from .errors import DetectionInfeasibleError, InvalidArgumentError, InvalidModelError
from .grouping import assignment, group_sketch, groups_svg
from .learning import cluster_montage_svg
from .model import load_model, model_to_dict
from .synthesis import synthesize
from .training import train_iterative

EXIT_OK, EXIT_ARGS, EXIT_IO, EXIT_INFEASIBLE = 0, 2, 3, 4

log = logging.getLogger("dsmsketch")


@contextmanager
def mapper(threads):
    n = threads or os.cpu_count() or 1
    if n <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=n) as pool:
        yield pool.map


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(args) -> SynthConfig:
    cfg = load_config(args.config)
    over = {}
    for item in args.set or ():
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise InvalidArgumentError("--set expects section.key=value, got %r" % item)
        key, value = item.split("=", 1)
        section, name = key.split(".", 1)
        over.setdefault(section, {})[name] = _parse_value(value)
    if getattr(args, "stroke_width", None) is not None:
        over.setdefault("render", {})["stroke_width"] = args.stroke_width
    return config_from_dict(over, cfg) if over else cfg


def _sketch_paths(inputs):
    out = []
    for p in inputs:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(p.glob("*.json")))
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError("no such input: %s" % p)
    return out


def _parse_bbox(text):
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InvalidArgumentError("--bbox expects X,Y,W,H") from exc
    if len(vals) != 4:
        raise InvalidArgumentError("--bbox expects X,Y,W,H")
    return vals


def _write(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


# --------------------------------------------------------------------------
# subcommands


def cmd_analyze(args, cfg):
    sketches = [load_sketch(p) for p in _sketch_paths(args.input)]
    report = analytics.analysis_report(sketches, args.bin_width, args.short_max, args.long_min)
    _write(args.out, dumps(report))
    if args.svg_dir:
        d = Path(args.svg_dir)
        _write(d / "histogram.svg", analytics.histogram_svg(analytics.length_histogram(sketches, args.bin_width)))
        _write(d / "temporal.svg", analytics.temporal_svg(analytics.temporal_matrix(sketches)))
        for k in sketches:
            ranks = dict(analytics.order_colormap(k))
            colors = [analytics.order_color(ranks[s.id]) for s in k.strokes]
            _write(d / ("%s_order.svg" % k.name), sketch_to_svg(k, cfg.stroke_width, colors))


def cmd_group(args, cfg):
    paths = _sketch_paths(args.input)
    sketches = [load_sketch(p) for p in paths]
    with mapper(args.threads) as m:
        results = list(m(lambda k: group_sketch(k, cfg.grouping), sketches))
    if len(sketches) == 1:
        out = assignment(results[0])
    else:
        out = {k.name: assignment(g) for k, g in zip(sketches, results)}
    _write(args.out, dumps(out))
    if args.svg_dir:
        for k, g in zip(sketches, results):
            _write(Path(args.svg_dir) / ("%s_groups.svg" % k.name), groups_svg(k, g, cfg.stroke_width))


def cmd_train(args, cfg):
    sketches = [load_sketch(p) for p in _sketch_paths(args.input)]
    with mapper(args.threads) as m:
        model, records, selected = train_iterative(sketches, cfg.training, args.max_iters, map_fn=m)
    _write(args.out, dumps(model_to_dict(model)))
    out = Path(args.out)
    _write(out.with_suffix(".svg"), cluster_montage_svg(model))
    summary = {"selected_iteration": selected, "iterations": [r.to_dict() for r in records]}
    _write(out.with_name(out.stem + "_iterations.json"), dumps(summary))
    if args.snapshots:
        d = Path(args.snapshots)
        for r in records:
            _write(d / ("iteration_%d.json" % r.iteration), dumps(r.to_dict()))
            for k, g in zip(r.sketches, r.groups):
                _write(d / ("iteration_%d" % r.iteration) / ("%s.svg" % k.name), groups_svg(k, g, cfg.stroke_width))


def _edges(args, cfg):
    src = args.image or args.edges
    if src is None:
        raise InvalidArgumentError("give --image or --edges")
    return load_edge_input(src, cfg.edge_threshold)


def _overlay_svg(edge_map, sketch, stroke_width):
    body = ['<circle cx="%g" cy="%g" r="0.5" fill="#bbbbbb"/>\n' % (x, y) for x, y, _ in edge_map.points]
    body += svg_paths(sketch.strokes, ["#d62728"] * len(sketch.strokes), stroke_width)
    return svg_document(edge_map.width, edge_map.height, body)


def cmd_fit(args, cfg):
    model = load_model(args.model)
    em = _edges(args, cfg)
    with mapper(args.threads) as m:
        res = synthesize(model, em, _parse_bbox(args.bbox), cfg.inference, map_fn=m)
    out = res.configuration.to_dict()
    out["mapping"] = {"origin": [float(v) for v in res.mapping.origin], "scale": float(res.mapping.scale),
                      "offset": [float(v) for v in res.mapping.offset]}
    out["image_locations"] = points_to_list(res.mapping.to_image(res.configuration.locations))
    _write(args.out, dumps(out))
    if args.svg:
        _write(args.svg, _overlay_svg(em, res.sketch, cfg.stroke_width))


def cmd_synth(args, cfg):
    model = load_model(args.model)
    em = _edges(args, cfg)
    with mapper(args.threads) as m:
        res = synthesize(model, em, _parse_bbox(args.bbox), cfg.inference, map_fn=m)
    _write(args.out, res.svg(cfg.stroke_width))
    if args.json:
        _write(args.json, dumps(sketch_to_dict(res.sketch)))


def cmd_render(args, cfg):
    k = load_sketch(args.input)
    _write(args.out, sketch_to_svg(k, cfg.stroke_width))
    if args.edges:
        from .edges import edge_map_to_dict

        _write(args.edges, dumps(edge_map_to_dict(render_sketch_edges(k))))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dsmsketch", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="override one config value")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
        sp.add_argument("--stroke-width", type=float, default=None)
        return sp

    a = common(sub.add_parser("analyze", help="stroke length and order statistics"))
    a.add_argument("--input", nargs="+", required=True, help="sketch JSON files or directories")
    a.add_argument("--out", required=True)
    a.add_argument("--svg-dir")
    a.add_argument("--bin-width", type=float, default=100.0)
    a.add_argument("--short-max", type=float, default=analytics.DEFAULT_SHORT_MAX)
    a.add_argument("--long-min", type=float, default=analytics.DEFAULT_LONG_MIN)
    a.set_defaults(func=cmd_analyze)

    g = common(sub.add_parser("group", help="perceptual grouping of raw strokes"))
    g.add_argument("--input", nargs="+", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--svg-dir")
    g.set_defaults(func=cmd_group)

    t = common(sub.add_parser("train", help="learn a model from a directory of sketches"))
    t.add_argument("--input", nargs="+", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--snapshots")
    t.add_argument("--max-iters", type=int, default=None)
    t.set_defaults(func=cmd_train)

    for name, func, helptext in (("fit", cmd_fit, "fit a model to an edge map"),
                                 ("synth", cmd_synth, "synthesize a sketch from an image")):
        f = common(sub.add_parser(name, help=helptext))
        f.add_argument("--model", required=True)
        f.add_argument("--image", help="grayscale PGM/PNG image")
        f.add_argument("--edges", help="edge map JSON or image")
        f.add_argument("--bbox", help="X,Y,W,H")
        f.add_argument("--out", required=True)
        if name == "fit":
            f.add_argument("--svg", help="overlay SVG")
        else:
            f.add_argument("--json", help="also write the sketch JSON")
        f.set_defaults(func=func)

    r = common(sub.add_parser("render", help="render a sketch JSON to SVG"))
    r.add_argument("--input", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--edges", help="also write its rendered edge map JSON")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve_config(args)
        args.func(args, cfg)
    except DetectionInfeasibleError as exc:
        print("detection infeasible: %s" % exc, file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvalidArgumentError, InvalidModelError, json.JSONDecodeError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ARGS
    except OSError as exc:
        print("io error: %s" % exc, file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
