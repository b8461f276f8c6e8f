"""Program extraction and sandboxed execution."""

import os
import re
import shlex
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import Optional

from prove.answers import (
    AnswerValue,
    _NUMBER_TOKEN,
    last_boxed_group,
    normalize,
)
from prove.errors import EmptyInput, LaunchError
from prove.runner import BEGIN_SENTINEL, END_SENTINEL, EXIT_OK, EXIT_TIMEOUT

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_NONZERO = "nonzero-exit"
STATUS_NO_OUTPUT = "no-output"
STATUS_LAUNCH_ERROR = "launch-error"

GRACE_MS = 500
STDOUT_CAP = 64 * 1024
STDERR_TAIL = 2 * 1024

_FENCE_TAG = re.compile(r"^[ \t]*[A-Za-z0-9_+#.-]*[ \t]*$")


@dataclass(frozen=True)
class SandboxLimits:
    wall_ms: int = 10_000
    mem_mb: int = 512

    def __post_init__(self):
        if self.wall_ms <= 0 or self.mem_mb <= 0:
            raise ValueError("sandbox limits must be positive")


@dataclass(frozen=True)
class ProgramArtifact:
    source: str
    origin_candidate: int
    fence_found: bool

    @property
    def runnable(self) -> bool:
        return bool(self.source.strip())


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str
    stdout_framed: str
    stderr_tail: str
    duration_ms: int
    parsed: Optional[AnswerValue]


def extract_code_block(translation_output: str, origin_candidate: int = 0) -> ProgramArtifact:
    """Body of the last triple-backtick fence; the whole text when unfenced."""
    segments = translation_output.split("```")
    if len(segments) == 1:
        return ProgramArtifact(translation_output, origin_candidate, fence_found=False)
    body = segments[-2] if len(segments) % 2 == 1 else segments[-1]
    # An odd segment count means the final fence closed; take the last body.
    # Even means the last fence never closed; its content runs to the end.
    first_line, sep, rest = body.partition("\n")
    if sep and _FENCE_TAG.match(first_line):
        body = rest
    elif not sep and _FENCE_TAG.match(first_line):
        body = ""
    return ProgramArtifact(body, origin_candidate, fence_found=True)


def parse_program_output(stdout: str, mode: str = "numeric") -> Optional[AnswerValue]:
    if mode == "boxed":
        group = last_boxed_group(stdout)
        if group is None:
            return None
        try:
            return normalize(group)
        except EmptyInput:
            return None
    tokens = _NUMBER_TOKEN.findall(stdout)
    if not tokens:
        return None
    try:
        return normalize(tokens[-1])
    except EmptyInput:
        return None


def default_runner_cmd() -> list:
    return [sys.executable, "-m", "prove.runner"]


def runner_cmd_from_config(value) -> list:
    if value is None:
        return default_runner_cmd()
    if isinstance(value, str):
        return shlex.split(value)
    return list(value)


_default_slots = threading.Semaphore(os.cpu_count() or 1)


def _frame(stdout: str):
    """Split runner stdout into the framed body, or None when unframed."""
    begin = stdout.find(BEGIN_SENTINEL + "\n")
    if begin < 0:
        return None
    start = begin + len(BEGIN_SENTINEL) + 1
    end = stdout.rfind(END_SENTINEL)
    if end < start:
        return stdout[start:]  # hard kill: frame never closed
    return stdout[start:end]


def execute(program: ProgramArtifact, limits: SandboxLimits = SandboxLimits(),
            runner_cmd: Optional[list] = None, mode: str = "numeric",
            slots: Optional[threading.Semaphore] = None) -> ExecutionOutcome:
    """Run one translated program in a fresh process and temp directory."""
    cmd = list(runner_cmd) if runner_cmd else default_runner_cmd()
    gate = slots if slots is not None else _default_slots
    with gate, tempfile.TemporaryDirectory(prefix="prove-exec-") as workdir:
        started = time.monotonic()
        program_path = os.path.join(workdir, "program.py")
        with open(program_path, "w", encoding="utf-8") as fh:
            fh.write(program.source)
        argv = cmd + [program_path, "--wall-ms", str(limits.wall_ms),
                      "--mem-mb", str(limits.mem_mb)]
        backstop_s = (limits.wall_ms + GRACE_MS) / 1000.0
        try:
            proc = subprocess.run(
                argv, cwd=workdir, stdin=subprocess.DEVNULL,
                capture_output=True, text=True, errors="replace",
                timeout=backstop_s,
            )
            stdout, stderr, returncode = proc.stdout, proc.stderr, proc.returncode
        except FileNotFoundError as exc:
            raise LaunchError(f"sandbox runner not found: {cmd[0]}") from exc
        except PermissionError as exc:
            raise LaunchError(f"sandbox runner not executable: {cmd[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            stdout = _decode(exc.stdout)
            stderr = _decode(exc.stderr)
            returncode = EXIT_TIMEOUT
    duration_ms = min(int((time.monotonic() - started) * 1000),
                      limits.wall_ms + GRACE_MS)
    body = _frame(stdout)
    if body is not None and len(body) > STDOUT_CAP:
        body = body[-STDOUT_CAP:]  # keep the tail, where the answer lives
    stderr_tail = stderr[-STDERR_TAIL:]

    if returncode == EXIT_TIMEOUT or returncode == -24:  # SIGXCPU backstop
        status = STATUS_TIMEOUT
        parsed = None
    elif returncode == EXIT_OK:
        parsed = parse_program_output(body or "", mode)
        status = STATUS_OK if parsed is not None else STATUS_NO_OUTPUT
    else:
        # covers program errors, unreadable file, and memory kills (137/-9)
        status = STATUS_NONZERO
        parsed = None
    return ExecutionOutcome(
        status=status,
        stdout_framed=(body or "").strip("\n"),
        stderr_tail=stderr_tail,
        duration_ms=duration_ms,
        parsed=parsed,
    )


def _decode(data) -> str:
    if data is None:
        return ""
    if isinstance(data, bytes):
        return data.decode("utf-8", errors="replace")
    return data
