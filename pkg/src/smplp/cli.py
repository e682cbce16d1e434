"""Command-line front end.

    smplp infer PROGRAM            marginals of the program's queries
    smplp mpe PROGRAM              most probable explanation of its evidence
    smplp learn PROGRAM DATA       EM fit of the t(...) labels
    smplp sample PROGRAM -n N      draw interpretations
    smplp translate GRAPH.json     argument graph -> program text
    smplp models PROGRAM           table of total choices and stable models

Exit status: 0 ok, 1 usage error, 2 semantic error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .argmap import parse_graph, translate
from .circuit import DEFAULT_MAX_MODELS
from .errors import SmplpError
from .ground import DEFAULT_MAX_ATOMS, ground
from .infer import Engine
from .learn import LearnConfig, em_learn, fitted_program, parse_dataset
from .syntax import desugar, parse_program


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(p):
    return f"{p:.6f}"


def _visible(g, atoms):
    names = [g.name(a) for a in sorted(atoms)]
    return [n for n in names if "__" not in n]


def _build_parser():
    parser = _Parser(prog="smplp", description="Probabilistic logic programs under stable-model semantics.")
    parser.add_argument("--version", action="version", version=f"smplp {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def common(p, guards=True):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("-o", "--output", help="write output to this file instead of stdout")
        if guards:
            p.add_argument("--max-atoms", type=int, default=DEFAULT_MAX_ATOMS, help="ground atom limit")
            p.add_argument("--max-models", type=int, default=DEFAULT_MAX_MODELS, help="model enumeration limit")

    p = sub.add_parser("infer", help="marginal probabilities of the queries")
    p.add_argument("program")
    common(p)

    p = sub.add_parser("mpe", help="most probable explanation of the evidence")
    p.add_argument("program")
    common(p)

    p = sub.add_parser("learn", help="fit learnable labels with EM")
    p.add_argument("program")
    p.add_argument("data")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("sample", help="sample interpretations")
    p.add_argument("program")
    p.add_argument("-n", type=int, default=10, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("translate", help="translate an argument graph (JSON) to a program")
    p.add_argument("graph")
    common(p, guards=False)

    p = sub.add_parser("models", help="list every total choice with its stable models")
    p.add_argument("program")
    common(p)
    return parser


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _engine(args):
    g = ground(desugar(parse_program(_read(args.program))), max_atoms=args.max_atoms)
    return Engine(g, max_models=args.max_models)


def cmd_infer(args):
    e = _engine(args)
    res = e.marginals()
    if args.json:
        return res.to_json()
    lines = [f"{name}: {_fmt(p)}" for name, p in res.probabilities.items()]
    lines.append(f"__inconsistent__: {_fmt(res.inconsistency)}")
    return lines


def cmd_mpe(args):
    e = _engine(args)
    r = e.mpe()
    g = e.g
    choice = [g.name(a) for a in sorted(r.choice)]
    models = [_visible(g, m) for m in r.models]
    if args.json:
        return {
            "probability": r.probability,
            "world_probability": r.world_probability,
            "choice": choice,
            "models": models,
        }
    lines = [f"probability: {_fmt(r.probability)}", f"world_probability: {_fmt(r.world_probability)}"]
    lines.append("choice: {" + ", ".join(n for n in choice if not n.startswith("__")) + "}")
    for m in models:
        lines.append("model: {" + ", ".join(m) + "}")
    if len(models) > 1:
        lines.append("note: the winning world has several models satisfying the evidence")
    return lines


def cmd_learn(args):
    program = parse_program(_read(args.program))
    data = parse_dataset(_read(args.data))
    cfg = LearnConfig(max_iters=args.iters, tol=args.tol, seed=args.seed)
    g = ground(desugar(program), extra_constants=data.constants(), max_atoms=args.max_atoms)
    res = em_learn(program, data, cfg, engine=Engine(g, max_models=args.max_models))
    if args.json:
        return {
            "parameters": res.named(),
            "iterations": res.iterations,
            "converged": res.converged,
            "loglik": res.loglik,
            "trace": [{res.names[k]: v for k, v in step.items()} for step in res.trace],
        }
    return fitted_program(program, res.params).rstrip("\n").split("\n")


def cmd_sample(args):
    e = _engine(args)
    draws = e.sample(args.n, seed=args.seed)
    visible = [None if d is None else _visible(e.g, d) for d in draws]
    if args.json:
        return {"samples": visible}
    return ["INCONSISTENT" if v is None else "{" + ", ".join(v) + "}" for v in visible]


def cmd_translate(args):
    text = translate(parse_graph(_read(args.graph)))
    if args.json:
        return {"program": text}
    return text.rstrip("\n").split("\n")


def cmd_models(args):
    e = _engine(args)
    g = e.g
    rows = e.world_table()
    if args.json:
        return {
            "worlds": [
                {
                    "choice": [g.name(a) for a in sorted(om)],
                    "probability": p,
                    "models": [_visible(g, m) for m in ms] if ms else None,
                }
                for om, p, ms in rows
            ]
        }
    lines = []
    for om, p, ms in rows:
        lines.append("{" + ", ".join(g.name(a) for a in sorted(om)) + "}  " + _fmt(p))
        if not ms:
            lines.append("    INCONSISTENT")
        for m in ms:
            lines.append("    {" + ", ".join(_visible(g, m)) + "}")
    return lines


COMMANDS = {
    "infer": cmd_infer,
    "mpe": cmd_mpe,
    "learn": cmd_learn,
    "sample": cmd_sample,
    "translate": cmd_translate,
    "models": cmd_models,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = _build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        out = COMMANDS[args.command](args)
    except OSError as exc:
        print(f"smplp: {exc}", file=stderr)
        return 1
    except (SmplpError, ValueError) as exc:
        print(f"smplp: {exc}", file=stderr)
        return 2
    text = json.dumps(out, indent=2, sort_keys=False) + "\n" if args.json else "\n".join(out) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main():
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
