"""Bundled languages and the program reader (s-expressions or a small infix
syntax for IMP-style programs)."""
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .semantics import parse_language
from .terms import (
    Conf, ConstInt, ConstStr, Node, NonValNode, State, TermParser,
    TermSyntaxError, ValNode, show,
)

BUNDLED = {
    "imp": "imp.lang",
    "imp-ext": "imp-ext.lang",
    "lockstep-demo": "lockstep-demo.lang",
}


def _read(pkg_dir, name):
    return resources.files("semcfg").joinpath(pkg_dir, name).read_text()


@lru_cache(maxsize=None)
def load_language(name):
    if name in BUNDLED:
        return parse_language(_read("langs", BUNDLED[name]))
    with open(name) as f:
        return parse_language(f.read())


def imp_language():
    return load_language("imp")


def imp_extended():
    return load_language("imp-ext")


def lockstep_demo():
    return load_language("lockstep-demo")


def bundled_programs():
    """name -> (language name, source text)."""
    out = {}
    for entry in sorted(resources.files("semcfg").joinpath("programs").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".imp"):
            text = entry.read_text()
            m = re.search(r"^#\s*lang:\s*(\S+)", text, re.M)
            out[entry.name[:-4]] = (m.group(1) if m else "imp", text)
    return out


# -- programs ---------------------------------------------------------------

@dataclass
class ProgramSource:
    text: str
    language: str = "imp"


class ProgramError(TermSyntaxError):
    pass


def parse_program(src, lang=None):
    """Parse a program into a term annotated with AST paths (origins)."""
    if isinstance(src, ProgramSource):
        lang = lang or load_language(src.language)
        text = src.text
    else:
        text = src
    term, _ = _parse(text, lang)
    return term


def load_program(text, lang):
    """Program term plus its starting reduction state (the language's initial
    state extended by an optional '@state [...]' directive)."""
    term, directive = _parse(text, lang)
    state = lang.initial_state
    if directive is not None:
        state = State(state.bindings + directive.bindings, state.tail)
    return term, state


def _parse(text, lang):
    directive = None
    body_lines = []
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if s.startswith("@state"):
            p = TermParser(s[len("@state"):], lang.value_syms if lang else None)
            try:
                directive = p.state()
            except ProgramError:
                raise
            except TermSyntaxError as e:
                raise ProgramError("in @state: " + str(e).split(": ", 1)[-1], i, 1)
            body_lines.append("")
            continue
        body_lines.append(re.sub(r"#.*$", "", raw) if not s.startswith(";;") else "")
    body = "\n".join(body_lines)
    if not body.strip():
        raise ProgramError("empty program")
    if body.lstrip().startswith("("):
        p = TermParser(body, lang.value_syms if lang else None)
        try:
            t = p.term()
            if not p.done():
                p.error("trailing input")
        except TermSyntaxError as e:
            raise ProgramError(str(e).split(": ", 1)[-1], e.line, e.col)
    else:
        t = InfixParser(body, lang).program()
    if lang is not None:
        errs = check_sorts(lang, t)
        if errs:
            raise ProgramError(errs[0])
    return annotate(t), directive


def annotate(t, path=()):
    if not isinstance(t, Node):
        return t
    kids = tuple(annotate(c, path + (i,)) for i, c in enumerate(t.children))
    return type(t)(t.sym, kids, path)


def subterm_at(t, path):
    for i in path:
        t = t.children[i]
    return t


def iter_nodes(t, path=()):
    yield path, t
    if isinstance(t, Node):
        for i, c in enumerate(t.children):
            yield from iter_nodes(c, path + (i,))


def check_sorts(lang, t, want=None):
    errs = []
    if isinstance(t, Node):
        g = lang.signatures.get(t.sym)
        if g is None:
            return ["undeclared node %s" % t.sym]
        if g.arity != len(t.children):
            return ["%s expects %d children, got %d" % (t.sym, g.arity, len(t.children))]
        if want and g.sort and want != "name" and g.sort != want:
            errs.append("%s is a %s, expected %s" % (t.sym, g.sort, want))
        for i, c in enumerate(t.children):
            ws = g.child_sorts[i] if g.child_sorts else None
            errs.extend(check_sorts(lang, c, ws))
    elif want == "stmt":
        errs.append("%s is not a statement" % show(t))
    elif want == "name" and not isinstance(t, ConstStr):
        errs.append("%s is not a variable name" % show(t))
    return errs


_TOK = re.compile(r"""
    (?P<ws>\s+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<int>\d+)
  | (?P<op>:=|<=|[+<;(){}=])
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)

KEYWORDS = {"if", "then", "else", "while", "do", "for", "to", "let", "in",
            "print", "skip", "true", "false"}


class InfixParser:
    """stmt ; stmt | x := e | if e then s else s | while e do s
    | for x = e to e do s | let x = e in s | print(e) | skip | { stmts }"""

    def __init__(self, text, lang=None):
        self.toks = []
        line, col, pos = 1, 1, 0
        while pos < len(text):
            m = _TOK.match(text, pos)
            if not m:
                raise ProgramError("unexpected character %r" % text[pos], line, col)
            kind, val = m.lastgroup, m.group()
            if kind != "ws":
                self.toks.append((kind, val, line, col))
            nl = val.count("\n")
            if nl:
                line += nl
                col = len(val) - val.rfind("\n")
            else:
                col += len(val)
            pos = m.end()
        self.i = 0
        self.lang = lang

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def error(self, msg):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else ("", "", 1, 1)
            raise ProgramError(msg + " at end of input", last[2], last[3] + len(last[1]))
        raise ProgramError("%s near %r" % (msg, t[1]), t[2], t[3])

    def at(self, val):
        t = self.peek()
        return t is not None and t[1] == val and t[0] in ("op", "id")

    def eat(self, val):
        if not self.at(val):
            self.error("expected %r" % val)
        self.i += 1

    def ident(self):
        t = self.peek()
        if t is None or t[0] != "id" or t[1] in KEYWORDS:
            self.error("expected an identifier")
        self.i += 1
        return t[1]

    def node(self, sym, *kids):
        if self.lang is not None and sym in self.lang.signatures:
            return self.lang.mk(sym, *kids)
        cls = ValNode if sym in ("true", "false", "skip") else NonValNode
        return cls(sym, kids)

    def program(self):
        s = self.stmts()
        if self.peek() is not None:
            self.error("unexpected input")
        return s

    def stmts(self):
        items = [self.stmt()]
        while self.at(";"):
            self.i += 1
            if self.peek() is None or self.at("}"):
                break
            items.append(self.stmt())
        out = items[-1]
        for s in reversed(items[:-1]):
            out = self.node("seq", s, out)
        return out

    def stmt(self):
        t = self.peek()
        if t is None:
            self.error("expected a statement")
        v = t[1]
        if v == "{":
            self.i += 1
            s = self.stmts()
            self.eat("}")
            return s
        if v == "skip":
            self.i += 1
            return self.node("skip")
        if v == "if":
            self.i += 1
            c = self.expr()
            self.eat("then")
            a = self.stmt()
            self.eat("else")
            b = self.stmt()
            return self.node("if", c, a, b)
        if v == "while":
            self.i += 1
            c = self.expr()
            self.eat("do")
            return self.node("while", c, self.stmt())
        if v == "for":
            self.i += 1
            x = self.ident()
            self.eat("=")
            lo = self.expr()
            self.eat("to")
            hi = self.expr()
            self.eat("do")
            return self.node("for", ConstStr(x), lo, hi, self.stmt())
        if v == "let":
            self.i += 1
            x = self.ident()
            self.eat("=")
            e = self.expr()
            self.eat("in")
            return self.node("let", ConstStr(x), e, self.stmt())
        if v == "print":
            self.i += 1
            self.eat("(")
            e = self.expr()
            self.eat(")")
            return self.node("print", e)
        x = self.ident()
        self.eat(":=")
        return self.node(":=", ConstStr(x), self.expr())

    def expr(self):
        a = self.sum()
        for op in ("<=", "<"):
            if self.at(op):
                self.i += 1
                return self.node(op, a, self.sum())
        return a

    def sum(self):
        a = self.atom()
        while self.at("+"):
            self.i += 1
            a = self.node("+", a, self.atom())
        return a

    def atom(self):
        t = self.peek()
        if t is None:
            self.error("expected an expression")
        kind, v = t[0], t[1]
        if kind == "int":
            self.i += 1
            return ConstInt(int(v))
        if kind == "str":
            self.i += 1
            return ConstStr(re.sub(r"\\(.)", r"\1", v[1:-1]))
        if v in ("true", "false"):
            self.i += 1
            return self.node(v)
        if v == "(":
            self.i += 1
            e = self.expr()
            self.eat(")")
            return e
        return self.node("var", ConstStr(self.ident()))


def output_of(state):
    """Printed values, oldest first, from the output list in a state."""
    out = state.get(ConstStr("__out")) if isinstance(state, State) else None
    items = []
    while isinstance(out, ValNode) and out.sym == "cons":
        items.append(out.children[0])
        out = out.children[1]
    return list(reversed(items))


def start_conf(lang, program, state=None):
    return Conf(program, lang.initial_state if state is None else state)

