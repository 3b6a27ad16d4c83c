"""
Unified debugging system for the convexlab analysis pipelines

Provides structured logging and performance monitoring for every
analysis stage (sampling, classification, hulls, exhaustion, bumping).
"""

import sys
import time
from datetime import datetime
from typing import Dict, Iterable, List, Optional, TextIO

from tqdm import tqdm

from ..utils.constants import __version__


class Debug:
    """
    Unified debug logging for the analysis pipelines

    Features:
    - Categorized logging with visual indicators
    - Hierarchical timers with breakdowns
    - Minimal overhead when disabled
    - Timestamped logs for better troubleshooting
    - Force parameters for critical logs
    - Writes to stderr so reports on stdout stay byte-identical
    """

    # Icon mapping for different categories
    CATEGORY_ICONS = {
        "general": "🔄",      # General operations/processing
        "timing": "⚡",        # Performance timing
        "cache": "💾",        # Cache operations
        "setup": "🔧",        # Configuration/setup
        "sampling": "🎲",     # Boundary / interior sampling
        "convexity": "📐",    # Pointwise verdicts and oracle
        "order": "🔢",        # Contact order fits
        "hull": "🧭",         # Hulls, extreme points, support functions
        "exhaust": "🌀",      # Exhaustion and mollification
        "bump": "⛰️",         # Boundary bumping
        "report": "📝",       # Report emission
        "success": "✅",      # Successful completion
        "warning": "⚠️",      # Warnings
        "error": "❌",        # Errors
        "info": "ℹ️",         # Statistics/info
        "file": "📂",         # File operations
        "none": "",
    }

    def __init__(self, enabled: bool = False, show_timestamps: bool = True, stream: Optional[TextIO] = None):
        self.enabled = enabled
        self.show_timestamps = show_timestamps
        self.stream = stream
        self.timers: Dict[str, float] = {}
        self.timer_hierarchy: Dict[str, List[str]] = {}
        self.timer_durations: Dict[str, float] = {}
        self.timer_messages: Dict[str, str] = {}
        self.active_timer_stack: List[str] = []

    def log(self, message: str, level: str = "INFO", category: str = "general", force: bool = False, indent_level: int = 0) -> None:
        """
        Log a categorized message with optional timestamp and indentation

        Args:
            message: Message to log
            level: Log level (INFO, WARNING, ERROR)
            category: Category for the message
            force: If True, always log regardless of enabled state
            indent_level: Indentation level (0=no indent, 1=2 spaces, 2=4 spaces, etc.)
        """
        if not (self.enabled or force):
            return

        icon = self.CATEGORY_ICONS.get(category, self.CATEGORY_ICONS["general"])
        if level == "WARNING":
            icon = self.CATEGORY_ICONS["warning"]
        elif level == "ERROR":
            icon = self.CATEGORY_ICONS["error"]

        if self.show_timestamps:
            timestamp = datetime.now().strftime("%H:%M:%S.%f")[:-3]
            prefix = f"[{timestamp}] {icon}"
        else:
            prefix = f"{icon}"

        if level != "INFO":
            prefix += f" [{level}]"

        indent = " " * (indent_level * 2)
        stream = self.stream if self.stream is not None else sys.stderr
        print(f"{prefix} {indent}{message}", file=stream, flush=True)

    def print_header(self, cli: bool = False) -> None:
        """Print the banner - always displayed"""
        original_timestamps = self.show_timestamps
        self.show_timestamps = False

        self.log("", category="none", force=True)
        self.log("┌─┐┌─┐┌┐┌┬  ┬┌─┐─┐ ┬┬  ┌─┐┌┐ ", category="none", force=True, indent_level=1)
        self.log("│  │ ││││└┐┌┘├┤ ┌┴┬┘│  ├─┤├┴┐", category="none", force=True, indent_level=1)
        self.log("└─┘└─┘┘└┘ └┘ └─┘┴ └─┴─┘┴ ┴└─┘", category="none", force=True, indent_level=1)
        cli_indicator = "CLI · " if cli else ""
        self.log(f"{cli_indicator}v{__version__} · numerical convexity toolkit", category="none", force=True, indent_level=1)
        self.log("━" * 44, category="none", force=True, indent_level=1)
        self.log("", category="none", force=True)

        self.show_timestamps = original_timestamps

        if self.enabled:
            self._print_environment_info()

    def _print_environment_info(self) -> None:
        """Print concise environment info for bug reports - zero cost when debug disabled"""
        import platform
        import numpy as np
        import scipy
        from .constants import get_thread_count

        py_ver = f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}"
        self.log(f"OS: {platform.system()} {platform.release()} | Python: {py_ver}", category="info")
        self.log(f"NumPy: {np.__version__} | SciPy: {scipy.__version__} | Threads: {get_thread_count()}", category="info")
        self.log("", category="none")

    def print_footer(self) -> None:
        """Print the closing rule - always displayed"""
        self.log("", category="none", force=True)
        self.log("────────────────────────", category="none", force=True)

    def start_timer(self, name: str, force: bool = False) -> None:
        """
        Start a named timer

        Args:
            name: Timer name
            force: If True, start timer even when debug is disabled
        """
        if not (self.enabled or force):
            return
        self.timers[name] = time.time()

        # Auto-hierarchy: if there's an active timer, this is a child
        if self.active_timer_stack:
            parent = self.active_timer_stack[-1]
            children = self.timer_hierarchy.setdefault(parent, [])
            if name not in children:
                children.append(name)
        self.active_timer_stack.append(name)

    def end_timer(self, name: str, message: Optional[str] = None,
                  force: bool = False, show_breakdown: bool = False) -> float:
        """
        End a timer and optionally log its duration

        Args:
            name: Timer name
            message: Optional message to log with the duration
            force: If True, log even when debug is disabled
            show_breakdown: If True, show breakdown of child timers

        Returns:
            Duration in seconds (0.0 if timer not found)
        """
        if name not in self.timers:
            return 0.0

        duration = time.time() - self.timers.pop(name)
        self.timer_durations[name] = duration
        if message:
            self.timer_messages[name] = message

        if self.active_timer_stack and self.active_timer_stack[-1] == name:
            self.active_timer_stack.pop()

        if not self.enabled and not force:
            return duration

        if message:
            self.log(f"{message}: {duration:.2f}s", category="timing", force=force)
        if message and show_breakdown:
            children = self.timer_hierarchy.get(name, [])
            child_total = sum(self.timer_durations.get(child, 0.0) for child in children)
            for child in sorted(children, key=lambda c: self.timer_durations.get(c, 0.0), reverse=True):
                child_duration = self.timer_durations.get(child, 0.0)
                if child_duration >= 0.01:  # Only show if >= 10ms
                    child_message = self.timer_messages.get(child, child)
                    self.log(f"└─ {child_message}: {child_duration:.2f}s", category="timing", force=force, indent_level=1)
            unaccounted = duration - child_total
            if children and unaccounted > 0.01:
                self.log(f"└─ (other operations): {unaccounted:.2f}s", category="timing", force=force, indent_level=1)

        return duration

    def clear_history(self) -> None:
        """Clear all timer tracking"""
        self.timers.clear()
        self.timer_hierarchy.clear()
        self.timer_durations.clear()
        self.timer_messages.clear()
        self.active_timer_stack.clear()

    def progress(self, iterable: Iterable, desc: str, total: Optional[int] = None) -> Iterable:
        """
        Progress bar over a per-point loop; silent unless debugging is enabled.
        """
        return tqdm(
            iterable=iterable,
            total=total,
            dynamic_ncols=True,
            desc=desc,
            file=self.stream or sys.stderr,
            disable=not self.enabled,
        )


def progress(iterable: Iterable, desc: str, debug: Optional[Debug] = None, total: Optional[int] = None) -> Iterable:
    """Module-level helper so library code can pass ``debug=None``."""
    if debug is None:
        return iterable
    return debug.progress(iterable, desc, total)
