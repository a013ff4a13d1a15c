"""
Console output for simcert: colors, check lines and a progress bar over work units.

TTY Detection:
- In a TTY the progress bar redraws on the bottom line with ANSI colors
- Otherwise every finished unit prints one plain line (pipes, CI logs)
"""

import shutil
import signal
import sys
import threading
import time
from typing import Optional

from .utils import RATE_SMOOTHING_FACTOR, format_duration, format_value

IS_TTY = sys.stdout.isatty()


class Colors:
    RESET = "\033[0m" if IS_TTY else ""
    BOLD = "\033[1m" if IS_TTY else ""
    GREEN = "\033[32m" if IS_TTY else ""
    CYAN = "\033[36m" if IS_TTY else ""
    YELLOW = "\033[33m" if IS_TTY else ""
    RED = "\033[31m" if IS_TTY else ""
    DIM = "\033[2m" if IS_TTY else ""


class Cursor:
    HIDE = "\033[?25l" if IS_TTY else ""
    SHOW = "\033[?25h" if IS_TTY else ""

    @staticmethod
    def move_to_bottom() -> str:
        if IS_TTY:
            rows = shutil.get_terminal_size().lines
            return f"\033[{rows};1H"
        return ""


def print_error(message: str):
    print(f"{Colors.RED}Error: {message}{Colors.RESET}", file=sys.stderr)


def print_warning(message: str):
    print(f"{Colors.YELLOW}⚠ {message}{Colors.RESET}", file=sys.stderr)


def check_line(name: str, passed: bool, lhs: Optional[float] = None, rhs: Optional[float] = None,
               detail: str = "") -> str:
    mark = f"{Colors.GREEN}✓{Colors.RESET}" if passed else f"{Colors.RED}✗{Colors.RESET}"
    values = f" {format_value(lhs)} <= {format_value(rhs)}" if lhs is not None and rhs is not None else ""
    extra = f" {Colors.DIM}{detail}{Colors.RESET}" if detail else ""
    return f"{mark} {name}{values}{extra}"


class ProgressBar:
    """Progress over a fixed number of work units (suites, seeds, rounds).

    Updates are thread-safe. Ctrl+C restores the cursor and exits with status 130.
    """

    def __init__(self, total_items: int, label: str, quiet: bool = False, handle_signals: bool = True):
        self.total_items = total_items
        self.label = label
        self.completed_items = 0
        self.current = ""
        self.quiet = quiet
        self.is_tty = IS_TTY and not quiet
        self.started = False
        self.start_time = time.time()
        self.last_update_time = self.start_time
        self.last_items = 0
        self.rate = 0.0  # units per second
        self._lock = threading.Lock()
        if handle_signals and threading.current_thread() is threading.main_thread():
            signal.signal(signal.SIGINT, self._signal_handler)

    def _signal_handler(self, signum, frame):
        self._cleanup()
        print(f"\n{Colors.YELLOW}⚠ Operation cancelled by user{Colors.RESET}")
        sys.exit(130)

    def _cleanup(self):
        sys.stdout.write(Cursor.SHOW)
        sys.stdout.flush()

    def _eta(self) -> str:
        remaining = self.total_items - self.completed_items
        if self.rate <= 0:
            return format_duration(None)
        return format_duration(remaining / self.rate)

    def update(self, current: str):
        with self._lock:
            self.current = current
        if self.is_tty:
            self._draw()

    def _draw(self):
        if not self.started:
            self.started = True
            sys.stdout.write(Cursor.HIDE + "\n")
        with self._lock:
            done, total, current = self.completed_items, self.total_items, self.current
            eta = self._eta()
        progress = done / total if total > 0 else 1.0
        cols = shutil.get_terminal_size().columns
        head = f"{self.label} {progress * 100:5.1f}% "
        tail = f" {done}/{total} | eta {eta} | {current[:24]}"
        width = max(10, cols - len(head) - len(tail) - 4)
        filled = int(width * progress)
        bar = f"{Colors.GREEN}{'█' * filled}{Colors.DIM}{'░' * (width - filled)}{Colors.RESET}"
        sys.stdout.write(Cursor.move_to_bottom() + "\033[2K")
        sys.stdout.write(f"{Colors.BOLD}{head}{Colors.RESET}[{bar}]{tail}")
        sys.stdout.flush()

    def complete_item(self, name: str = ""):
        """Mark one unit done; the rate is an exponential moving average."""
        with self._lock:
            self.completed_items += 1
            now = time.time()
            dt = now - self.last_update_time
            if dt > 0:
                instant = (self.completed_items - self.last_items) / dt
                self.rate = instant if self.rate == 0 else (
                    RATE_SMOOTHING_FACTOR * self.rate + (1 - RATE_SMOOTHING_FACTOR) * instant)
                self.last_items = self.completed_items
                self.last_update_time = now
            if name:
                self.current = name
            if not self.is_tty and not self.quiet:
                pct = self.completed_items / self.total_items * 100 if self.total_items > 0 else 100
                print(f"{self.label} [{self.completed_items}/{self.total_items}] ({pct:.1f}%) {self.current}")
                sys.stdout.flush()
        if self.is_tty:
            self._draw()

    def finish(self, summary: str = ""):
        elapsed = format_duration(time.time() - self.start_time)
        text = summary or f"{self.label}: {self.completed_items}/{self.total_items} done in {elapsed}"
        if self.is_tty:
            sys.stdout.write(Cursor.move_to_bottom() + "\033[2K" + text + "\n")
        elif not self.quiet:
            print(text)
        self._cleanup()
