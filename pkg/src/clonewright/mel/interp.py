"""A small evaluator for the side-effect-free subset of Mel.

Used to check that refactorings preserve behaviour: entry functions are
evaluated before and after a transformation and must return equal values.
Send (``!``) and any call that cannot be resolved within the project are
evaluation errors, which keeps the evaluable subset honest.

``/`` is integer division; Mel has no floats.
"""

from __future__ import annotations

from dataclasses import dataclass

from clonewright.errors import ClonewrightError
from clonewright.mel.syntax import Expr, ModuleAst


class EvalError(ClonewrightError):
    pass


@dataclass(frozen=True)
class Atom:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Closure:
    params: tuple
    body: tuple
    env: tuple  # frozen (name, value) pairs
    module: str


class Interpreter:
    def __init__(self, modules: dict[str, ModuleAst], max_steps: int = 200_000):
        self.modules = modules
        self.steps = max_steps

    def run(self, module: str, name: str, args: tuple = ()) -> object:
        return self._call(module, name, [self._check_value(a) for a in args])

    def _tick(self) -> None:
        self.steps -= 1
        if self.steps <= 0:
            raise EvalError("evaluation step limit exceeded")

    def _check_value(self, v: object) -> object:
        return v

    def _call(self, module: str, name: str, args: list) -> object:
        mod = self.modules.get(module)
        if mod is None:
            raise EvalError(f"unknown module {module}")
        fd = mod.fundef(name, len(args))
        if fd is None:
            raise EvalError(f"unknown function {module}:{name}/{len(args)}")
        for clause in fd.clauses:
            env: dict[str, object] = {}
            if self._match_all(clause.patterns, args, env):
                return self._body(clause.body, env, module)
        raise EvalError(f"no clause of {module}:{name}/{len(args)} matches {args!r}")

    def _match_all(self, patterns, values, env: dict) -> bool:
        for p, v in zip(patterns, values):
            if not self._match(p, v, env):
                return False
        return True

    def _match(self, p: Expr, v: object, env: dict) -> bool:
        self._tick()
        k = p.kind
        if k == "var":
            if p.value in env:
                return env[p.value] == v
            env[p.value] = v
            return True
        if k == "int":
            return isinstance(v, int) and v == p.value
        if k == "str":
            return isinstance(v, str) and v == p.value
        if k == "atom":
            return v == Atom(p.value)
        if k == "nil":
            return v == []
        if k == "cons":
            if not isinstance(v, list) or not v:
                return False
            return self._match(p.children[0], v[0], env) and self._match(
                p.children[1], v[1:], env
            )
        if k == "tuple":
            if not isinstance(v, tuple) or len(v) != len(p.children):
                return False
            return self._match_all(p.children, list(v), env)
        raise EvalError(f"invalid pattern kind {k}")

    def _body(self, body, env: dict, module: str) -> object:
        result: object = None
        for e in body:
            result = self._eval(e, env, module)
        return result

    def _eval(self, e: Expr, env: dict, module: str) -> object:
        self._tick()
        k = e.kind
        if k == "int" or k == "str":
            return e.value
        if k == "atom":
            return Atom(e.value)
        if k == "var":
            if e.value not in env:
                raise EvalError(f"unbound variable {e.value}")
            return env[e.value]
        if k == "nil":
            return []
        if k == "cons":
            head = self._eval(e.children[0], env, module)
            tail = self._eval(e.children[1], env, module)
            if not isinstance(tail, list):
                raise EvalError("improper list tail")
            return [head] + tail
        if k == "tuple":
            return tuple(self._eval(c, env, module) for c in e.children)
        if k == "binop":
            return self._binop(e, env, module)
        if k == "match":
            value = self._eval(e.children[1], env, module)
            if not self._match(e.children[0], value, env):
                raise EvalError(f"no match of right-hand side value {value!r}")
            return value
        if k == "call":
            args = [self._eval(c, env, module) for c in e.children]
            return self._call(module, e.value, args)
        if k == "remote":
            mod, name = e.value
            args = [self._eval(c, env, module) for c in e.children]
            return self._call(mod, name, args)
        if k == "varcall":
            callee = self._eval(e.children[0], env, module)
            args = [self._eval(c, env, module) for c in e.children[1:]]
            if not isinstance(callee, Closure):
                raise EvalError("calling a non-function value")
            inner = dict(callee.env)
            if not self._match_all(callee.params, args, inner):
                raise EvalError("fun arguments do not match")
            return self._body(callee.body, inner, callee.module)
        if k == "fun":
            return Closure(e.fun_params(), e.fun_body(), tuple(env.items()), module)
        if k == "case":
            scrutinee = self._eval(e.children[0], env, module)
            for clause in e.children[1:]:
                inner = dict(env)
                if self._match(clause.children[0], scrutinee, inner):
                    return self._body(clause.children[1:], inner, module)
            raise EvalError(f"no case clause matches {scrutinee!r}")
        raise EvalError(f"cannot evaluate {k}")

    def _binop(self, e: Expr, env: dict, module: str) -> object:
        op = e.value
        if op == "!":
            raise EvalError("send is a side effect and cannot be evaluated")
        lhs = self._eval(e.children[0], env, module)
        rhs = self._eval(e.children[1], env, module)
        if op == "++":
            if isinstance(lhs, list) and isinstance(rhs, list):
                return lhs + rhs
            if isinstance(lhs, str) and isinstance(rhs, str):
                return lhs + rhs
            raise EvalError("++ expects two lists or two strings")
        if not (isinstance(lhs, int) and isinstance(rhs, int)):
            raise EvalError(f"{op} expects integers")
        if op == "+":
            return lhs + rhs
        if op == "-":
            return lhs - rhs
        if op == "*":
            return lhs * rhs
        if op == "/":
            if rhs == 0:
                raise EvalError("division by zero")
            return lhs // rhs
        raise EvalError(f"unknown operator {op}")


def evaluate_entry(modules: dict[str, ModuleAst], module: str, name: str) -> object:
    """Evaluate a 0-ary entry function."""
    return Interpreter(modules).run(module, name)
