"""Couple the optimiser to an external evaluator through text files.

Each evaluation renders a template with ``%name%`` placeholders into a fresh
working directory, runs the evaluator command there, and reads the last
``key = number`` line of its output file.
"""

from __future__ import annotations

import logging
import math
import os
import re
import shlex
import signal
import subprocess
import tempfile
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)

PLACEHOLDER = re.compile(r"%([A-Za-z_][A-Za-z0-9_]*)%")


class BridgeError(RuntimeError):
    """Base class; `vector` holds the parameter values of the failed call."""

    def __init__(self, message, vector=None):
        if vector is not None:
            message = f"{message} [parameters: {dict(vector)}]"
        super().__init__(message)
        self.vector = dict(vector) if vector is not None else None


class TemplateError(BridgeError):
    pass


class EvaluatorFailedError(BridgeError):
    pass


class EvaluatorTimeoutError(BridgeError):
    pass


class ObjectiveNotFoundError(BridgeError):
    pass


class ObjectiveParseError(BridgeError):
    pass


class UnusedParameterWarning(UserWarning):
    pass


def format_value(value: float) -> str:
    return format(float(value), ".17g")


def placeholders(template: str) -> set[str]:
    return set(PLACEHOLDER.findall(template))


def render_input(template: str, vector: Mapping[str, float], strict_unused: bool = False) -> str:
    """Substitute every ``%name%`` with the 17-significant-digit value of `name`."""
    names = placeholders(template)
    missing = sorted(names - set(vector))
    if missing:
        raise TemplateError(f"template placeholder(s) with no parameter: {', '.join(missing)}", vector)
    unused = sorted(set(vector) - names)
    if unused:
        msg = f"parameter(s) with no placeholder in template: {', '.join(unused)}"
        if strict_unused:
            raise TemplateError(msg, vector)
        warnings.warn(msg, UnusedParameterWarning, stacklevel=2)
    rendered = PLACEHOLDER.sub(lambda m: format_value(vector[m.group(1)]), template)
    left = PLACEHOLDER.search(rendered)
    if left:
        raise TemplateError(f"placeholder {left.group(0)} survived rendering", vector)
    return rendered


@dataclass(frozen=True)
class CouplingSpec:
    template_path: Path
    rendered_input_path: str  # relative paths resolve inside the per-call working directory
    command: str
    output_path: str
    objective_key: str = "PMV_total"
    timeout: float = 600.0
    strict_unused: bool = False

    def __post_init__(self):
        object.__setattr__(self, "template_path", Path(self.template_path))
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if not self.command.strip():
            raise ValueError("command must not be empty")

    def template(self) -> str:
        return self.template_path.read_text(encoding="utf-8")

    def check(self, names: Sequence[str]) -> None:
        """Every optimiser parameter must appear in the template."""
        absent = sorted(set(names) - placeholders(self.template()))
        if absent:
            raise TemplateError(f"parameter(s) missing from template {self.template_path}: {', '.join(absent)}")


def extract_objective(text: str, key: str, vector=None) -> float:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=\s*(.*?)\s*$")
    found = None
    for line in text.splitlines():
        m = pattern.match(line)
        if m:
            found = m.group(1)
    if found is None:
        raise ObjectiveNotFoundError(f"no line '{key} = <number>' in evaluator output", vector)
    try:
        value = float(found)
    except ValueError:
        raise ObjectiveParseError(f"cannot parse objective {found!r} for key {key!r}", vector) from None
    if not math.isfinite(value):
        raise ObjectiveParseError(f"objective {found!r} for key {key!r} is not finite", vector)
    return value


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except ProcessLookupError:
        pass
    proc.wait()


def run_and_extract(spec: CouplingSpec, vector: Mapping[str, float], keep_dir: str | None = None) -> float:
    """Render, run and parse one external evaluation."""
    rendered = render_input(spec.template(), vector, spec.strict_unused)
    with tempfile.TemporaryDirectory(prefix="wallopt-eval-", dir=keep_dir) as workdir:
        input_path = Path(workdir, spec.rendered_input_path)
        input_path.parent.mkdir(parents=True, exist_ok=True)
        input_path.write_text(rendered, encoding="utf-8")
        args = shlex.split(spec.command)
        log.debug("running %s in %s", args, workdir)
        # Output goes to files, not pipes: a background child holding a pipe
        # open would otherwise block us until it exits.
        stdout_path, stderr_path = Path(workdir, ".evaluator.out"), Path(workdir, ".evaluator.err")
        with open(stdout_path, "wb") as out, open(stderr_path, "wb") as err:
            try:
                proc = subprocess.Popen(args, cwd=workdir, stdout=out, stderr=err, stdin=subprocess.DEVNULL,
                                        start_new_session=True)
            except OSError as exc:
                raise EvaluatorFailedError(f"external evaluator failed to start: {exc}", vector) from exc
            try:
                proc.wait(timeout=spec.timeout)
            except subprocess.TimeoutExpired:
                _kill_group(proc)
                raise EvaluatorTimeoutError(
                    f"external evaluator timed out after {spec.timeout} s and was terminated", vector) from None
            except BaseException:
                _kill_group(proc)
                raise
        # Reap anything the evaluator left running in its session.
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            pass
        stderr = stderr_path.read_bytes()
        if proc.returncode != 0:
            tail = stderr.decode("utf-8", "replace").strip()[-500:]
            raise EvaluatorFailedError(
                f"external evaluator failed with exit status {proc.returncode}: {tail}", vector)
        output = Path(workdir, spec.output_path)
        if not output.is_file():
            raise ObjectiveNotFoundError(f"evaluator wrote no output file {spec.output_path}", vector)
        return extract_objective(output.read_text(encoding="utf-8"), spec.objective_key, vector)


class BridgeCost:
    """Cost function over a parameter vector, evaluated through the bridge."""

    def __init__(self, spec: CouplingSpec, names: Sequence[str]):
        self.spec = spec
        self.names = tuple(names)
        spec.check(self.names)

    def __call__(self, vector: Sequence[float]) -> float:
        return run_and_extract(self.spec, dict(zip(self.names, vector)))
