"""Sandboxed program runner.

Runs one untrusted Python file under wall-clock and memory limits, framing
the program's stdout between sentinel lines so the parent can separate it
from diagnostics. Exit codes: 0 ok, 124 wall-clock timeout, 137 memory kill,
2 unreadable program file, 1 program error.
"""

import argparse
import os
import resource
import signal
import sys
import traceback

BEGIN_SENTINEL = "<<<PROVE_OUT_BEGIN>>>"
END_SENTINEL = "<<<PROVE_OUT_END>>>"

EXIT_OK = 0
EXIT_PROGRAM_ERROR = 1
EXIT_UNREADABLE = 2
EXIT_TIMEOUT = 124
EXIT_MEMORY = 137


class WallClockExpired(BaseException):
    # BaseException so a program's bare `except Exception` cannot swallow it.
    pass


def _on_alarm(signum, frame):
    raise WallClockExpired()


class _TrackingWriter:
    """Pass-through stdout wrapper that remembers the last written character."""

    def __init__(self, raw):
        self._raw = raw
        self.last_char = "\n"

    def write(self, s):
        if s:
            self.last_char = s[-1]
        return self._raw.write(s)

    def flush(self):
        self._raw.flush()

    def __getattr__(self, name):
        return getattr(self._raw, name)


def install_limits(wall_ms: int, mem_mb: int) -> None:
    mem_bytes = mem_mb * 1024 * 1024
    try:
        resource.setrlimit(resource.RLIMIT_AS, (mem_bytes, mem_bytes))
    except (ValueError, OSError):
        pass  # platforms without hard address-space caps still get the alarm
    # CPU cap one second past the wall limit: a kernel backstop in case the
    # program resets our alarm handler.
    cpu_seconds = max(1, wall_ms // 1000 + 1)
    try:
        resource.setrlimit(resource.RLIMIT_CPU, (cpu_seconds, cpu_seconds + 1))
    except (ValueError, OSError):
        pass
    signal.signal(signal.SIGALRM, _on_alarm)
    signal.setitimer(signal.ITIMER_REAL, wall_ms / 1000.0)


def deny_network() -> None:
    import socket

    def _denied(*args, **kwargs):
        raise OSError("network access is disabled in the sandbox")

    socket.socket = _denied
    socket.create_connection = _denied


def _warn(message: str) -> None:
    try:
        print(message, file=sys.stderr)
    except BaseException:
        pass


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="prove-runner")
    parser.add_argument("program")
    parser.add_argument("--wall-ms", type=int, default=10_000)
    parser.add_argument("--mem-mb", type=int, default=512)
    args = parser.parse_args(argv)
    if args.wall_ms <= 0 or args.mem_mb <= 0:
        parser.error("limits must be positive")

    try:
        with open(args.program, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        print(f"cannot read program file: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE

    try:
        code = compile(source, args.program, "exec")
    except (SyntaxError, ValueError):
        traceback.print_exc()
        return EXIT_PROGRAM_ERROR

    deny_network()

    raw_stdout = sys.stdout
    raw_stdout.write(BEGIN_SENTINEL + "\n")
    raw_stdout.flush()
    tracker = _TrackingWriter(raw_stdout)
    sys.stdout = tracker

    def finish(exit_code: int) -> None:
        # The end sentinel must start its own line but add nothing else
        # between the frames.
        try:
            signal.setitimer(signal.ITIMER_REAL, 0.0)
        except (ValueError, OSError):
            pass
        try:
            if tracker.last_char != "\n":
                raw_stdout.write("\n")
            raw_stdout.write(END_SENTINEL + "\n")
            raw_stdout.flush()
            sys.stderr.flush()
        finally:
            os._exit(exit_code)

    program_globals = {
        "__name__": "__main__",
        "__file__": args.program,
        "__builtins__": __builtins__,
    }
    install_limits(args.wall_ms, args.mem_mb)
    try:
        exec(code, program_globals)
    except WallClockExpired:
        _warn("wall-clock limit exceeded")
        finish(EXIT_TIMEOUT)
    except MemoryError:
        _warn("memory limit exceeded")
        finish(EXIT_MEMORY)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 1)
        finish(code)
    except BaseException:
        try:
            traceback.print_exc()
        except BaseException:
            pass
        finish(EXIT_PROGRAM_ERROR)
    finish(EXIT_OK)
    return EXIT_OK  # unreachable; keeps the signature honest


if __name__ == "__main__":
    sys.exit(main())
