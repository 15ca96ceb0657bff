import pytest

from corpus.cases import CASES
from errors import ParseError, TypeCheckError
from frontend import compile_source, interpret, parse, typecheck, unparse
from frontend.ast_nodes import Binary, Call, For, Method, SimdIf
from frontend.lexer import int_value, tokenize
from regionir.evaluator import eval_grid
from regionir.verify import verify

COPY_KERNEL = """
kernel copy(surface src, surface dst) {
    vector<int, 16> v;
    read(src, thread_x() * 64, v);
    write(dst, thread_x() * 64, v + 1);
}
"""


def _diagnostic(exc_info):
    return exc_info.value.diagnostics[0]


def test_tokenize_skips_comments_and_tracks_positions():
    tokens = tokenize("int a; // note\n  a <<= 0x1Fu;")
    texts = [t.text for t in tokens]
    assert texts == ["int", "a", ";", "a", "<<=", "0x1Fu", ";", ""]
    assert tokens[3].line == 2 and tokens[3].col == 3
    assert tokens[0].kind == "keyword" and tokens[-1].kind == "eof"


def test_int_literals():
    assert int_value("0b0101") == (5, False)
    assert int_value("0xFFu") == (255, True)
    assert int_value("42") == (42, False)


def test_unexpected_character_is_located():
    with pytest.raises(ParseError) as exc:
        tokenize("int a;\n  a = $;", "k.cmk")
    d = _diagnostic(exc)
    assert (d.line, d.col, d.file) == (2, 7, "k.cmk")


def test_precedence_levels():
    kernel = parse("kernel k(int a) { int b = a + 2 * 3 & 1 | 4; }")
    init = kernel.body[0].init
    assert isinstance(init, Binary) and init.op == "|"
    assert init.lhs.op == "&"
    assert init.lhs.lhs.op == "+"
    assert init.lhs.lhs.rhs.op == "*"


def test_template_arguments_stop_at_closing_angle():
    kernel = parse("kernel k(surface s) { vector<int, 8> v; vector<int, 4> w = v.select<2 + 2, 1>(0); }")
    sel = kernel.body[1].init
    assert isinstance(sel, Method) and sel.name == "select"
    assert len(sel.targs) == 2


def test_write_atomic_takes_operation_name():
    kernel = parse("kernel k(surface s) { vector<uint, 8> o; write_atomic<inc>(s, o); }")
    call = kernel.body[1].expr
    assert isinstance(call, Call) and call.targs == ["inc"]


def test_simd_if_and_for_parse():
    kernel = parse(
        "kernel k(surface s) { vector<int, 8> v; for (int i = 0; i < 4; i++) { v += i; } "
        "simd_if (v > 0) { v = 1; } simd_else { v = 2; } }"
    )
    assert isinstance(kernel.body[1], For)
    assert isinstance(kernel.body[2], SimdIf) and kernel.body[2].else_body


@pytest.mark.parametrize(
    "source, message",
    [
        ("kernel k(surface s) { vector<int, 4> v = v.select<1,2,3>(0); }", "malformed template argument list"),
        ("kernel k(surface s) { vector<int, 4> v; v.frobnicate(); }", "unknown intrinsic method"),
        ("kernel k(surface s) { int a = sqrt(1); }", "unknown intrinsic"),
        ("kernel k(surface s) { int a = 1; ", "end of input"),
        ("kernel k(surface s) { write_atomic(s, 1); }", "needs an operation"),
    ],
)
def test_parse_errors(source, message):
    with pytest.raises(ParseError) as exc:
        parse(source)
    assert message in _diagnostic(exc).message


@pytest.mark.parametrize("case", CASES, ids=lambda c: c.name)
def test_unparse_round_trips_corpus(case, corpus_source):
    for name in case.kernels:
        kernel = parse(corpus_source(name))
        text = unparse(kernel)
        assert parse(text) == kernel
        assert unparse(parse(text)) == text


@pytest.mark.parametrize(
    "body, message",
    [
        ("vector<int, 4> v; vector<int, 8> w = v;", "element-count mismatch"),
        ("vector<int, 8> v; vector<int, 4> w = v.select<4, 2>(2);", "out of bounds"),
        ("vector<int, 6> v; vector<float, 4> w = v.format<float, 2, 2>();", "format byte-size mismatch"),
        ("int n = 4; vector<int, n> v;", "compile-time"),
        ("vector<int, 4> v = w;", "not declared"),
        ("vector<float, 4> v; vector<float, 4> w = v & v;", "needs integer operands"),
        ("matrix<float, 32, 64> big;", "register file"),
        ("vector<int, 8> v; simd_if (v > 0) { int a = 1; }", "scalar assignment"),
        ("vector<int, 8> v; vector<int, 4> w; simd_if (v > 0) { w = 1; }", "mask has 8"),
        ("vector<int, 4> v; v + 1;", "no effect"),
        ("vector<int, 8> v; vector<ushort, 4> i; vector<int, 4> w; v.iselect(i) = w;", "assignment to an r-value"),
        ("vector<int, 4> v; vector<int, 8> w; v.replicate<2>() = w;", "assignment to an r-value"),
    ],
)
def test_type_errors(body, message):
    source = f"kernel k(surface s) {{ {body} }}"
    with pytest.raises(TypeCheckError) as exc:
        typecheck(parse(source, "bad.cmk"), "bad.cmk")
    d = _diagnostic(exc)
    assert message in d.message
    assert d.file == "bad.cmk" and d.line == 1 and d.col > 1


def test_diagnostic_format():
    with pytest.raises(TypeCheckError) as exc:
        compile_source("kernel k(surface s) {\n    int a = b;\n}", "x.cmk")
    assert str(_diagnostic(exc)).startswith("x.cmk:2:")
    assert ": error: " in str(exc.value)


def test_for_loops_unroll_into_fresh_scopes():
    checked = typecheck(
        parse(
            "kernel k(surface s) { vector<int, 4> v = 0; "
            "for (int i = 0; i < 4; i++) { int t = i * 2; v.select<1, 1>(i) = t; } }"
        )
    )
    assert not any(isinstance(s, For) for s in checked.body)
    assert len(checked.body) == 1 + 4 * 2


def test_lowered_module_verifies():
    module = compile_source(COPY_KERNEL, "copy.cmk")
    verify(module)
    assert module.name == "copy"
    assert [p.name for p in module.surfaces] == ["src", "dst"]
    assert [p.surface_kind for p in module.surfaces] == ["buffer", "buffer"]


def _kernel_launches():
    first = {}
    for case in CASES:
        for launch in case.launches:
            first.setdefault(launch.kernel, pytest.param(case, launch, id=launch.kernel))
    return [first[name] for name in sorted(first)]


@pytest.mark.parametrize("case,launch", _kernel_launches())
@pytest.mark.parametrize("seed", [3, 17, 40])
def test_interpreter_agrees_with_region_ir_evaluator(case, launch, seed, corpus_source):
    source = corpus_source(launch.kernel)
    inputs = case.inputs(seed)
    direct = {name: s.copy() for name, s in inputs.items()}
    lowered = {name: s.copy() for name, s in inputs.items()}
    interpret(typecheck(parse(source)), direct, launch.grid, dict(launch.args))
    eval_grid(compile_source(source), lowered, launch.grid, dict(launch.args))
    for name in inputs:
        assert direct[name].tobytes() == lowered[name].tobytes(), name
