"""Hypothesis strategies producing Haskell functions with a known decision count.

Each strategy yields ``(source_text, decisions)`` where ``decisions`` is
counted while generating, independently of both the parser and the metrics.
"""

from __future__ import annotations

from hypothesis import strategies as st

ATOMS = ["x", "y", "xs", "0", "1", "True", "n", '"s"', "'c'"]


def _atom():
    return st.sampled_from(ATOMS).map(lambda a: (a, 0))


def _combine(children):
    two = st.tuples(children, children)
    three = st.tuples(children, children, children)

    def if_(t):
        (c, dc), (a, da), (b, db) = t
        return f"(if {c} then {a} else {b})", 1 + dc + da + db

    def boolop(op):
        def build(t):
            (a, da), (b, db) = t
            return f"({a} {op} {b})", 1 + da + db
        return build

    def plain(t):
        (a, da), (b, db) = t
        return f"({a} + {b})", da + db

    def app(t):
        (a, da), (b, db) = t
        return f"(g {a} {b})", da + db

    def lam(t):
        a, da = t
        return f"(\\z -> {a})", da

    def hof(t):
        a, da = t
        return f"(map (+ 1) {a})", da

    @st.composite
    def case_(draw):
        scrut, d = draw(children)
        n = draw(st.integers(1, 4))
        alts = []
        total = d + n - 1
        for i in range(n):
            pat = "_" if i == n - 1 else str(i)
            if draw(st.booleans()):
                g = draw(st.integers(1, 3))
                parts = []
                for j in range(g):
                    cond, dc = draw(children) if j < g - 1 else ("otherwise", 0)
                    body, db = draw(children)
                    parts.append(f"| {cond} -> {body}")
                    total += dc + db
                total += g - 1
                alts.append(f"{pat} {' '.join(parts)}")
            else:
                body, db = draw(children)
                total += db
                alts.append(f"{pat} -> {body}")
        return f"(case {scrut} of {{ {'; '.join(alts)} }})", total

    @st.composite
    def comp(draw):
        head, total = draw(children)
        quals = []
        for i in range(draw(st.integers(1, 3))):
            kind = draw(st.sampled_from(["gen", "guard", "let"]))
            e, d = draw(children)
            total += d
            if kind == "gen":
                quals.append(f"q{i} <- [{e}]")
                total += 1
            elif kind == "guard":
                quals.append(f"{e} == {e}")
                total += 1 + d
            else:
                quals.append(f"let w{i} = {e}")
        return f"[{head} | {', '.join(quals)}]", total

    @st.composite
    def let_(draw):
        (a, da), (b, db), (c, dc) = draw(three)
        return f"(let {{ h z = {a}; k = {b} }} in {c})", da + db + dc

    @st.composite
    def do_(draw):
        (a, da), (b, db), (c, dc) = draw(three)
        return f"(do {{ {a}; z <- {b}; let {{ m q = {c} }}; return z }})", da + db + dc

    return st.one_of(
        three.map(if_), two.map(boolop("&&")), two.map(boolop("||")), two.map(plain),
        two.map(app), children.map(lam), children.map(hof), case_(), comp(), let_(), do_(),
    )


expressions = st.recursive(_atom(), _combine, max_leaves=12)


@st.composite
def functions(draw, name: str = "f"):
    """A top-level function with 1-3 clauses, optional guards and a where block."""
    n = draw(st.integers(1, 3))
    lines = []
    total = n - 1
    for i in range(n):
        pat = "_" if i == n - 1 else str(i)
        if draw(st.booleans()):
            g = draw(st.integers(1, 3))
            total += g - 1
            lines.append(f"{name} {pat}")
            for j in range(g):
                cond, dc = draw(expressions) if j < g - 1 else ("otherwise", 0)
                body, db = draw(expressions)
                total += dc + db
                lines.append(f"  | {cond} = {body}")
        else:
            body, db = draw(expressions)
            total += db
            lines.append(f"{name} {pat} = {body}")
        if draw(st.booleans()):
            e1, d1 = draw(expressions)
            e2, d2 = draw(expressions)
            total += d1 + d2 + 1
            lines.append("  where")
            lines.append(f"    helper a = {e1}")
            lines.append(f"    helper2 0 = {e2}")
            lines.append("    helper2 _ = 1")
    return "\n".join(lines) + "\n", total + 1


@st.composite
def if_wrapped(draw, name: str = "f"):
    """The same body with and without an enclosing decision-free if/else."""
    body, d = draw(expressions)
    before = f"{name} x = {body}\n"
    after = f"{name} x = if x > 0 then {body} else 0\n"
    return before, after, 1 + d
