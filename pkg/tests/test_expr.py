import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctxsvc import expr as E


@pytest.mark.parametrize(
    "text, printed",
    [
        ("a==1&&b", "(a==1)&&b"),
        ("!(x>3) || y", "!(x>3)||y"),
        ("max(a,b)*2", "max(a,b)*2"),
        ("ctx.age>=21", "ctx.age>=21"),
        ("1-2-3", "(1-2)-3"),
        ("2*(3+4)", "2*(3+4)"),
        ("a => b", "a=>b"),
        ('"montreal"==city', '"montreal"==city'),
    ],
)
def test_parse_and_print(text, printed):
    assert E.to_text(E.parse(text)) == printed


def test_assignment_needs_permission():
    with pytest.raises(E.ExprSyntaxError):
        E.parse("x := 1")
    e = E.parse("x := x + 300", allow_assign=True)
    assert e == E.Assign("x", E.BinOp("+", E.Name("x"), E.Lit(300)))
    assert E.names(e) == {"x"}


@pytest.mark.parametrize("bad", ["a +", "a == == b", "(a", "max(a)", ""])
def test_syntax_errors(bad):
    with pytest.raises(E.ExprSyntaxError):
        E.parse(bad)


def test_evaluate_errors():
    def nothing(name):
        raise KeyError(name)

    with pytest.raises(E.UnboundName):
        E.evaluate(E.parse("a+1"), nothing)
    with pytest.raises(E.TypeMismatch):
        E.evaluate(E.parse("true+1"), nothing)


def test_simplify_constant_price():
    assert E.simplify(E.parse("(60*5)+100")) == E.Lit(400)
    assert E.is_constant(E.parse("max(3,4)+1"))
    assert not E.is_constant(E.parse("60*n"))


def test_conj_and_conjuncts():
    parts = [E.parse("a"), E.parse("b==1"), E.parse("!c")]
    assert E.conjuncts(E.conj(parts)) == parts
    assert E.conj([]) == E.TRUE
    assert E.negate(E.negate(E.parse("x>1"))) == E.parse("x>1")


def test_rename_and_ctx_dims():
    e = E.parse("ctx.tier>=1 && a==b")
    assert E.ctx_dims(e) == {"tier"}
    assert E.to_text(E.rename(e, {"a": "aB"})) == "(ctx.tier>=1)&&(aB==b)"


# ------------------------------------------------------ randomized checks

VARS = ("p", "q", "r")


def int_exprs():
    leaves = st.one_of(st.integers(0, 20).map(E.Lit), st.sampled_from(VARS).map(E.Name))

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*"]), children, children).map(lambda t: E.BinOp(*t)),
            st.tuples(st.sampled_from(["max", "min"]), children, children).map(lambda t: E.Call(t[0], (t[1], t[2]))),
        )

    return st.recursive(leaves, extend, max_leaves=8)


def bool_exprs():
    atoms = st.tuples(st.sampled_from(list(E.COMPARISON)), int_exprs(), int_exprs()).map(lambda t: E.BinOp(*t))
    atoms = st.one_of(atoms, st.booleans().map(E.Lit))

    def extend(children):
        return st.one_of(
            children.map(E.Not),
            st.tuples(st.sampled_from(["&&", "||", "=>"]), children, children).map(lambda t: E.BinOp(*t)),
        )

    return st.recursive(atoms, extend, max_leaves=6)


def reference_eval(e, env):
    """Straightforward evaluator used as the oracle for the library's."""
    if isinstance(e, E.Lit):
        return e.value
    if isinstance(e, E.Name):
        return env[e.id]
    if isinstance(e, E.Not):
        return not reference_eval(e.operand, env)
    if isinstance(e, E.Call):
        vals = [reference_eval(a, env) for a in e.args]
        return max(vals) if e.fn == "max" else min(vals)
    a, b = reference_eval(e.left, env), reference_eval(e.right, env)
    return {
        "+": lambda: a + b,
        "-": lambda: a - b,
        "*": lambda: a * b,
        "==": lambda: a == b,
        "!=": lambda: a != b,
        "<": lambda: a < b,
        "<=": lambda: a <= b,
        ">": lambda: a > b,
        ">=": lambda: a >= b,
        "&&": lambda: a and b,
        "||": lambda: a or b,
        "=>": lambda: (not a) or b,
    }[e.op]()


envs = st.fixed_dictionaries({v: st.integers(-5, 5) for v in VARS})


@settings(max_examples=200)
@given(bool_exprs(), envs)
def test_evaluate_matches_reference(e, env):
    assert E.evaluate(e, env.__getitem__) == reference_eval(e, env)


@settings(max_examples=200)
@given(bool_exprs())
def test_print_parse_roundtrip(e):
    assert E.parse(E.to_text(e)) == e


@settings(max_examples=200)
@given(int_exprs(), envs)
def test_simplify_preserves_value(e, env):
    assert E.evaluate(E.simplify(e), env.__getitem__) == reference_eval(e, env)
