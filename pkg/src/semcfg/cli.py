"""semcfg command line: machines, interpreted and compiled CFGs, analyses."""
import argparse
import os
import re
import sys

from . import abstraction, am, analyses, cfg, codegen, languages, pam, patterns
from .semantics import LangSyntaxError, StuckStep, sos_run
from .terms import TermSyntaxError, is_value_like, show

EXIT_OK, EXIT_VALIDATION, EXIT_PRECONDITION, EXIT_TRUNCATED, EXIT_CODEGEN = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, msg, code=EXIT_VALIDATION):
        super().__init__(msg)
        self.code = code


# -- helpers ----------------------------------------------------------------

def _read(path):
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        raise CliError("cannot read %s: %s" % (path, e.strerror))


def _lang_name(args, text=None):
    if args.lang:
        return args.lang
    if text is not None:
        m = re.search(r"^#\s*lang:\s*(\S+)", text, re.M)
        if m:
            return m.group(1)
    return "imp"


def _language(name):
    if name not in languages.BUNDLED and not os.path.exists(name):
        raise CliError("unknown language %r (bundled: %s)" % (name, ", ".join(sorted(languages.BUNDLED))))
    return languages.load_language(name)


def _program_text(name):
    if not os.path.exists(name):
        bundled = languages.bundled_programs()
        stem = os.path.basename(name)
        stem = stem[:-4] if stem.endswith(".imp") else stem
        if stem in bundled:
            return bundled[stem][1]
    return _read(name)


def _program(args):
    text = _program_text(args.program)
    lang = _language(_lang_name(args, text))
    term, state = languages.load_program(text, lang)
    return lang, term, state


def _machine(lang, args):
    _, rules = am.convert(lang, assume_invertible=tuple(args.assume_invertible or ()))
    return rules


def _abstraction(args, lang, default="value-irrel"):
    return abstraction.by_name(args.abs or default, lang)


def _emit(args, text):
    if getattr(args, "output", None):
        with open(args.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _check_truncated(args, what):
    if args.strict:
        raise CliError("%s truncated by the budget" % what, EXIT_TRUNCATED)
    print("warning: %s truncated by the budget" % what, file=sys.stderr)


def _explore(args, lang, rules, abs_, term, state, trace=False):
    g = cfg.explore_graph(rules, abs_, cfg.initial_state(lang, term, state), args.max_states,
                          trace_origins=trace)
    if g.truncated:
        _check_truncated(args, "exploration")
    return g


def _project(args, g):
    pi = cfg.basic_block_projection(g) if args.projection == "basic-block" else cfg.identity_projection
    return cfg.project_graph(g, pi, self_loops=args.self_loops,
                             labels=lambda s: cfg.node_label(s, args.verbose_labels))


# -- commands ---------------------------------------------------------------

def cmd_pam_dump(args):
    lang = _language(_lang_name(args))
    _emit(args, pam.dump_rules(pam.sos_to_pam(lang), hide_calls=args.hide_calls))


def cmd_am_dump(args):
    lang = _language(_lang_name(args))
    _emit(args, am.dump_am(_machine(lang, args), hide_calls=args.hide_calls))


def cmd_check(args):
    lang = _language(_lang_name(args))
    rules = pam.sos_to_pam(lang)
    verdicts = am.check_up_rules_invertible(rules, args.depth_bound)
    updown = am.check_no_up_down(rules)
    lines = ["invertibility:"]
    lines += ["  %s" % verdicts[n] for n in sorted(verdicts)] or ["  (no up-up rules)"]
    lines.append("up-down rules:")
    lines += ["  %s: prohibited" % n for n in updown] or ["  none"]
    assumed = set(args.assume_invertible or ())
    bad = [n for n, v in verdicts.items() if v.verdict != am.INVERTIBLE and n not in assumed]
    ok = not bad and not updown
    lines.append("result: %s" % ("ok" if ok else "fails"))
    _emit(args, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_PRECONDITION


def cmd_run(args):
    lang, term, state = _program(args)
    c = languages.start_conf(lang, term, state)
    if args.machine == "sos":
        trace = sos_run(lang, c, args.fuel)
        if isinstance(trace[-1], StuckStep):
            trace.pop()
        last, ctx = trace[-1], pam.Emp
    else:
        if args.machine == "pam":
            rules = pam.sos_to_pam(lang)
            trace = pam.pam_run(rules, pam.PamState(c, pam.Emp, pam.DOWN), args.fuel)
        else:
            trace = am.am_run(_machine(lang, args), am.AmState(c, pam.Emp), args.fuel)
        last, ctx = trace[-1].conf, trace[-1].ctx
    steps = len(trace) - 1
    if is_value_like(last.term) and ctx == pam.Emp:
        status = "halted"
    else:
        status = "out of fuel" if steps >= args.fuel else "stuck"
    out = languages.output_of(last.state)
    lines = ["steps: %d" % steps, "status: %s" % status, "final: %s" % show(last)]
    if out:
        lines.append("output: %s" % " ".join(x.s if hasattr(x, "s") else show(x) for x in out))
    _emit(args, "\n".join(lines) + "\n")


def cmd_cfg(args):
    lang, term, state = _program(args)
    rules = _machine(lang, args)
    abs_ = _abstraction(args, lang)
    g = _explore(args, lang, rules, abs_, term, state)
    c = _project(args, g)
    _emit(args, cfg.emit_dot(c, verbose=args.verbose_labels))


def _patterns(args, lang, rules, abs_):
    if args.node_type == "all":
        ps = patterns.gen_all_patterns(lang, rules, abs_, args.max_pattern_nodes)
    else:
        if args.node_type not in lang.signatures:
            raise CliError("language %s has no node type %r" % (lang.name, args.node_type))
        ps = {args.node_type: patterns.gen_graph_pattern(lang, rules, abs_, args.node_type,
                                                         args.max_pattern_nodes)}
    bad = [s for s, p in sorted(ps.items()) if not p.finite]
    if bad:
        _check_truncated(args, "pattern(s) " + ", ".join(bad))
    return ps


def cmd_pattern(args):
    lang = _language(_lang_name(args))
    rules = _machine(lang, args)
    ps = _patterns(args, lang, rules, _abstraction(args, lang))
    if args.format == "dump":
        text = "".join(patterns.pattern_dump(p) for _, p in sorted(ps.items()))
    else:
        text = "".join(patterns.pattern_dot(p) for _, p in sorted(ps.items()))
    _emit(args, text)


def cmd_codegen(args):
    lang = _language(_lang_name(args))
    rules = _machine(lang, args)
    args.node_type = "all"
    ps = _patterns(args, lang, rules, _abstraction(args, lang))
    recipes, _, failed = codegen.gen_all_recipes(ps)
    if args.json:
        with open(args.json, "w") as f:
            f.write(codegen.recipes_to_json(recipes))
    _emit(args, "\n".join(codegen.pretty_print_recipe(r) for _, r in sorted(recipes.items())))
    if failed:
        raise CliError("no projection found for: " + ", ".join(failed), EXIT_CODEGEN)


def cmd_apply_recipes(args):
    try:
        recipes = codegen.recipes_from_json(_read(args.recipes))
    except (ValueError, KeyError, TypeError) as e:
        raise CliError("bad recipe file %s: %s" % (args.recipes, e))
    lang, term, _ = _program(args)
    errs = languages.check_sorts(lang, term)
    if errs:
        raise CliError(str(errs[0]))
    _emit(args, cfg.emit_dot(codegen.recipe_to_cfg(recipes, term)))


def cmd_certify(args):
    lang = _language(_lang_name(args))
    rules = _machine(lang, args)
    abs_ = _abstraction(args, lang)
    ps = patterns.gen_all_patterns(lang, rules, abs_, args.max_pattern_nodes)
    verdict, bad = patterns.certify_termination(ps)
    _emit(args, "%s%s\n" % (verdict, " (%s)" % ", ".join(bad) if bad else ""))
    if bad and args.strict:
        return EXIT_TRUNCATED
    return EXIT_OK


def cmd_analyze(args):
    lang, term, state = _program(args)
    rules = _machine(lang, args)
    if args.analysis == "const-prop":
        abs_ = _abstraction(args, lang, "value-irrel")
        args.projection = args.projection or "identity"
    else:
        abs_ = _abstraction(args, lang, "value-irrel")
        args.projection = args.projection or "basic-block"
    # the analyses read program text through positions; keep them apart
    g = _explore(args, lang, rules, abs_, term, state, trace=True)
    c = _project(args, g)
    order = sorted(c.nodes, key=lambda n: (c.labels[n], show(n)))
    width = max((len(c.labels[n]) for n in order), default=0)
    lines = []
    if args.analysis == "const-prop":
        res = analyses.constant_propagation(c, term)
        for n in order:
            lines.append("%-*s  in: %s" % (width, c.labels[n], analyses.show_env(res.env_in[n])))
        lines.append("exit: %s" % analyses.show_env(res.at_exit(c)))
        _emit(args, "\n".join(lines) + "\n")
        return EXIT_OK
    verdict = analyses.paren_balance(c, term, args.open, args.close, args.cap)
    lines.append(str(verdict))
    if isinstance(verdict, analyses.Unbalanced):
        lines += ["  " + c.labels[n] for n in verdict.witness]
    _emit(args, "\n".join(lines) + "\n")
    if isinstance(verdict, analyses.Balanced):
        return 0
    return 1 if isinstance(verdict, analyses.Unbalanced) else 2


# -- argument parsing -------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lang", help="bundled language name or a .lang file "
                        "(default: the program's '# lang:' line, else imp)")
    common.add_argument("--abs", help="identity, value-irrel, value-irrel-skipcalls, "
                        "expr-irrel or bool-track:VAR,...")
    common.add_argument("--max-states", type=int, default=cfg.DEFAULT_MAX_STATES)
    common.add_argument("--max-pattern-nodes", type=int, default=patterns.DEFAULT_MAX_NODES)
    common.add_argument("--fuel", type=int, default=1000, help="step budget for concrete runs")
    common.add_argument("--strict", action="store_true", help="treat budget truncation as an error")
    common.add_argument("--verbose-labels", action="store_true")
    common.add_argument("--assume-invertible", action="append", metavar="RULE",
                        help="skip the invertibility check for RULE")
    common.add_argument("-o", "--output", help="write to this file instead of stdout")

    ap = argparse.ArgumentParser(prog="semcfg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(fn=fn)
        return p

    def graph_opts(p, projection=None):
        p.add_argument("--projection", choices=["identity", "basic-block"], default=projection)
        p.add_argument("--self-loops", choices=["within", "literal"], default="within")

    for name, fn, h in (("pam-dump", cmd_pam_dump, "print the phased machine rules"),
                        ("am-dump", cmd_am_dump, "print the fused abstract machine rules")):
        p = add(name, fn, h)
        p.add_argument("--hide-calls", action="store_true", help="omit semantic-function frames")
    p = add("check", cmd_check, "report invertibility and up-down rules")
    p.add_argument("--depth-bound", type=int, default=32)
    p = add("run", cmd_run, "run a program concretely")
    p.add_argument("program", help="program file or bundled program name")
    p.add_argument("--machine", choices=["sos", "pam", "am"], default="am")
    p = add("cfg", cmd_cfg, "interpreted-mode CFG as DOT")
    p.add_argument("program")
    graph_opts(p, "identity")
    p = add("pattern", cmd_pattern, "graph pattern(s) as DOT or a dump")
    p.add_argument("node_type", help="node type or 'all'")
    p.add_argument("--format", choices=["dot", "dump"], default="dot")
    p = add("codegen", cmd_codegen, "CFG-generator recipes for every node type")
    p.add_argument("--json", help="also write the recipes as JSON to this file")
    p = add("apply-recipes", cmd_apply_recipes, "compiled-mode CFG as DOT")
    p.add_argument("recipes")
    p.add_argument("program")
    add("certify-termination", cmd_certify, "check that every graph pattern is finite")
    p = add("analyze", cmd_analyze, "constant propagation or parenthesis balance")
    p.add_argument("analysis", choices=["const-prop", "paren"])
    p.add_argument("program")
    graph_opts(p)
    p.add_argument("--open", default="(")
    p.add_argument("--close", default=")")
    p.add_argument("--cap", type=int, default=8, help="largest tracked bracket depth")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = args.fn(args)
    except CliError as e:
        print("error: %s" % e, file=sys.stderr)
        return e.code
    except am.PreconditionFailed as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_PRECONDITION
    except (codegen.CodegenFailed, codegen.MissingRecipe) as e:
        print("error: %s" % (e.args[0] if e.args else e), file=sys.stderr)
        return EXIT_CODEGEN
    except (TermSyntaxError, LangSyntaxError, abstraction.UnknownAbstraction,
            abstraction.MissingSortTable, patterns.NotContextDiscarding, ValueError) as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
