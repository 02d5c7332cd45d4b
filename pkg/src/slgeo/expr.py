"""Small expression grammar for boundary functions phi(x, y).

Accepts numbers, x, y, pi, + - * / ^ (power), parentheses and sin, cos, exp.
Parsing goes through Python's ``ast`` with a node whitelist; nothing is eval'd.
"""
import ast

import numpy as np

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTS = {"pi": np.pi}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValueError):
    pass


def _compile(node, src):
    if isinstance(node, ast.Expression):
        return _compile(node.body, src)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        c = float(node.value)
        return lambda x, y: c
    if isinstance(node, ast.Name):
        if node.id == "x":
            return lambda x, y: x
        if node.id == "y":
            return lambda x, y: y
        if node.id in _CONSTS:
            c = _CONSTS[node.id]
            return lambda x, y: c
        raise ExpressionError(f"unknown name {node.id!r} in {src!r} (allowed: x, y, pi)")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, src), _compile(node.right, src)
        return lambda x, y: op(left(x, y), right(x, y))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        arg = _compile(node.operand, src)
        if isinstance(node.op, ast.USub):
            return lambda x, y: -arg(x, y)
        return arg
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        fn, arg = _FUNCS[node.func.id], _compile(node.args[0], src)
        return lambda x, y: fn(arg(x, y))
    raise ExpressionError(f"unsupported syntax {type(node).__name__} in {src!r}")


def parse_expression(src):
    """Compile an expression string to a vectorized callable f(x, y).

    ``^`` means power (``**`` is accepted too).

    Examples
    --------
    >>> f = parse_expression("x^2 - 0.5*sin(pi*y)")
    >>> float(f(1.0, 0.0))
    1.0
    """
    if not isinstance(src, str) or not src.strip():
        raise ExpressionError("empty expression")
    try:
        tree = ast.parse(src.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {src!r}: {exc.msg} at column {exc.offset}") from None
    fn = _compile(tree, src)

    def phi(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return np.broadcast_to(fn(x, y), np.broadcast(x, y).shape).astype(float)

    phi.source = src
    return phi
