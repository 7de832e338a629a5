"""UPPAAL 4.x model (``.xml``) and query (``.q``) files.

Export is byte-stable: identical networks give identical documents. A small
reader recovers templates, locations and labels from an exported model, and
``parse_query`` reads back the query lines.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from . import expr as E
from .tagen import CTX_STRUCT, Network, Query, Template

DOCTYPE = (
    "<!DOCTYPE nta PUBLIC '-//Uppaal Team//DTD Flat System 1.1//EN' "
    "'http://www.it.uu.se/research/group/darts/uppaal/flat-1_1.dtd'>"
)
GRID_X, GRID_Y = 170, 110

GROUP_COMMENTS = {
    "pre": "preconditions, available before execution",
    "input": "input parameter availability",
    "post": "postconditions, established by execution",
    "output": "output parameter availability",
    "param": "typed parameters",
    "path": "per-flow accumulators (price scaled by the factor above)",
    "legal": "legal-issue variables",
    "condition": "composition conditions",
}


class ExportError(Exception):
    pass


class QuerySyntaxError(Exception):
    pass


# ------------------------------------------------------------- expressions


def uppaal_text(e: E.Expr) -> str:
    """Render in UPPAAL syntax: ``=`` assignments, ``imply``, ternary max/min."""

    def compound(node):
        return isinstance(node, E.BinOp)

    def go(node) -> str:
        if isinstance(node, E.Lit):
            v = node.value
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, str):
                raise ExportError(f"string literal {v!r} left in a generated label")
            return E.format_number(v)
        if isinstance(node, E.Name):
            return node.id
        if isinstance(node, E.CtxRef):
            return f"{CTX_STRUCT}.{node.dim}"
        if isinstance(node, E.Not):
            inner = go(node.operand)
            return "!" + (f"({inner})" if compound(node.operand) else inner)
        if isinstance(node, E.Call):
            a, b = node.args
            cmp_ = ">" if node.fn == "max" else "<"
            return f"({go(a)}{cmp_}{go(b)}?{go(a)}:{go(b)})"
        if isinstance(node, E.Assign):
            return f"{node.target}={go(node.value)}"
        op = " imply " if node.op == "=>" else node.op
        left = go(node.left)
        if compound(node.left) and not (node.op in ("&&", "||", "+", "*") and node.left.op == node.op):
            left = f"({left})"
        right = go(node.right)
        if compound(node.right):
            right = f"({right})"
        return f"{left}{op}{right}"

    return go(e)


# ------------------------------------------------------------ declarations


def _decl_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if not v.is_integer():
            raise ExportError(f"non-integral initial value {v}")
        v = int(v)
    return str(v)


def global_declarations(net: Network) -> str:
    d = net.decls
    lines = ["// Generated model. Do not edit.", f"// price scale factor: {d.scale}"]
    for dim, codes in d.ctx_codes:
        lines.append(f"// {CTX_STRUCT}.{dim}: " + ", ".join(f"{t}={c}" for t, c in codes))
    if d.string_codes:
        lines.append("// strings: " + ", ".join(f"{s}={c}" for s, c in d.string_codes))
    if d.channels:
        lines.append("")
        lines.append(f"chan {', '.join(d.channels)};")
    if d.constants:
        lines.append("")
        lines.append("// enumeration values")
        for name, code in d.constants:
            lines.append(f"const int {name} = {code};")
    group = None
    ctx_fields = []
    for v in d.variables:
        if v.group == "context":
            ctx_fields.append(v)
            continue
        if v.group != group:
            group = v.group
            lines.append("")
            lines.append(f"// {GROUP_COMMENTS.get(group, group)}")
        lines.append(f"{v.type} {v.name} = {_decl_value(v.init)};")
    if ctx_fields:
        lines.append("")
        lines.append("// requester context")
        body = " ".join(f"{v.type} {v.name.split('.', 1)[1]};" for v in ctx_fields)
        init = ", ".join(_decl_value(v.init) for v in ctx_fields)
        lines.append(f"struct {{ {body} }} {CTX_STRUCT} = {{ {init} }};")
    return "\n".join(lines) + "\n"


def _template_declaration(t: Template, net: Network) -> str:
    lines = []
    if t.name == net.main.name:
        for i, sig in enumerate(net.flows, start=1):
            lines.append(f"// flow {i}: {sig}")
    if t.clocks:
        lines.append(f"clock {', '.join(t.clocks)};")
    return "\n".join(lines) + ("\n" if lines else "")


# ----------------------------------------------------------------- export


def _label(parent, kind: str, text: str, x: int, y: int):
    el = ET.SubElement(parent, "label", kind=kind, x=str(x), y=str(y))
    el.text = text


def _positions(t: Template, net: Network) -> dict:
    pos = {}
    if t.name == net.main.name:
        pos[t.initial] = (0, 0)
        # one row per flow, following the edges out of the initial location
        row, col = 0, 0
        for e in t.edges:
            if e.source == t.initial:
                row += 1
                col = 0
            col += 1
            pos[e.target] = (col * GRID_X, row * GRID_Y)
        for k, loc in enumerate(t.locations):
            if pos.get(loc.id) is None:
                pos[loc.id] = (k * GRID_X, -GRID_Y)
        return pos
    for k, loc in enumerate(t.locations):
        pos[loc.id] = (k * 2 * GRID_X, 0)
    return pos


def export_model(net: Network) -> str:
    root = ET.Element("nta")
    ET.SubElement(root, "declaration").text = global_declarations(net)
    for t in net.templates:
        tel = ET.SubElement(root, "template")
        ET.SubElement(tel, "name", x="5", y="5").text = t.name
        ET.SubElement(tel, "declaration").text = _template_declaration(t, net)
        ids = {loc.id: f"id{k}" for k, loc in enumerate(t.locations)}
        pos = _positions(t, net)
        for loc in t.locations:
            x, y = pos[loc.id]
            lel = ET.SubElement(tel, "location", id=ids[loc.id], x=str(x), y=str(y))
            ET.SubElement(lel, "name", x=str(x - 20), y=str(y - 30)).text = loc.id
            if loc.invariant is not None:
                _label(lel, "invariant", uppaal_text(loc.invariant), x - 20, y + 15)
            if loc.committed:
                ET.SubElement(lel, "committed")
        ET.SubElement(tel, "init", ref=ids[t.initial])
        for e in t.edges:
            sx, sy = pos[e.source]
            tx, ty = pos[e.target]
            mx, my = (sx + tx) // 2, (sy + ty) // 2
            if tx < sx:
                my += 45  # keep labels of return edges apart
            tr = ET.SubElement(tel, "transition")
            ET.SubElement(tr, "source", ref=ids[e.source])
            ET.SubElement(tr, "target", ref=ids[e.target])
            k = 0
            if e.select:
                _label(tr, "select", e.select, mx, my + 15 * k)
                k += 1
            if e.guard != E.TRUE:
                _label(tr, "guard", uppaal_text(e.guard), mx, my + 15 * k)
                k += 1
            if e.sync is not None:
                _label(tr, "synchronisation", e.sync[0] + e.sync[1], mx, my + 15 * k)
                k += 1
            if e.update:
                _label(tr, "assignment", ",".join(uppaal_text(u) for u in e.update), mx, my + 15 * k)
    ET.SubElement(root, "system").text = f"system {', '.join(net.system)};\n"
    ET.indent(root, space="\t")
    body = ET.tostring(root, encoding="unicode", short_empty_elements=True)
    return '<?xml version="1.0" encoding="utf-8"?>\n' + DOCTYPE + "\n" + body + "\n"


def export_queries(qs) -> str:
    lines = []
    category = None
    for q in qs:
        if q.category != category:
            category = q.category
            lines.append(f"// {category}")
        lines.append(q.text)
    return "\n".join(lines) + ("\n" if lines else "")


def write_text(path, text: str) -> None:
    """Write UTF-8 with LF line endings regardless of platform."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ----------------------------------------------------------------- reading


def read_model(text: str) -> dict:
    """Lightweight reader: ``{template: {"locations": [...], "edges": [...], "initial": name}}``.

    Locations are ``(name, committed, invariant text)``; edges are
    ``(source name, target name, {label kind: text})``.
    """
    start = text.index("<nta")
    root = ET.fromstring(text[start:])
    out = {"declaration": root.findtext("declaration") or "", "system": root.findtext("system") or ""}
    templates = {}
    for tel in root.findall("template"):
        name = tel.findtext("name")
        by_id = {}
        locations = []
        for lel in tel.findall("location"):
            lname = lel.findtext("name")
            by_id[lel.get("id")] = lname
            inv = None
            for lab in lel.findall("label"):
                if lab.get("kind") == "invariant":
                    inv = lab.text
            locations.append((lname, lel.find("committed") is not None, inv))
        edges = []
        for tr in tel.findall("transition"):
            labels = {lab.get("kind"): lab.text for lab in tr.findall("label")}
            edges.append((by_id[tr.find("source").get("ref")], by_id[tr.find("target").get("ref")], labels))
        templates[name] = {
            "locations": locations,
            "edges": edges,
            "initial": by_id[tel.find("init").get("ref")],
            "declaration": tel.findtext("declaration") or "",
        }
    out["templates"] = templates
    return out


def parse_query(line: str, category: str = "") -> Query:
    """Parse ``E<> phi`` or ``A[] phi imply psi``."""
    text = line.strip()
    try:
        if text.startswith("E<>"):
            s = E.TokenStream(text[3:])
            rhs = E.parse_expr(s)
            if s.peek.kind != "eof":
                s.error(f"unexpected {s.peek.text!r}")
            return Query("E<>", rhs, category=category)
        if text.startswith("A[]"):
            s = E.TokenStream(text[3:])
            lhs = E.parse_expr(s)
            if s.accept("imply"):
                rhs = E.parse_expr(s)
            else:
                lhs, rhs = E.TRUE, lhs
            if s.peek.kind != "eof":
                s.error(f"unexpected {s.peek.text!r}")
            spaced = " imply " in text and any(f" {op} " in text.split(" imply ", 1)[1] for op in E.COMPARISON)
            return Query("A[]", rhs, lhs, category, spaced)
    except E.ExprSyntaxError as exc:
        raise QuerySyntaxError(f"{line!r}: {exc}") from None
    raise QuerySyntaxError(f"{line!r}: expected 'E<>' or 'A[]'")


def read_queries(text: str) -> list:
    out = []
    category = ""
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("//"):
            category = line[2:].strip()
            continue
        out.append(parse_query(line, category))
    return out
