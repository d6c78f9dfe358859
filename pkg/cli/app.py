"""Main CLI application using cmd module."""

import cmd
import os
import readline
import shlex
import sys

from .commands.common import run_command
from .commands.compare import handle_compare, handle_strategies
from .commands.evaluate import handle_eval, handle_neighbors
from .commands.train import handle_sweep, handle_train
from .commands.vocab import handle_build_vocab, handle_sample
from .ui import draw_header, enter_fullscreen, exit_fullscreen, help_table, separator_line

# History file for readline
HISTORY_FILE = os.path.expanduser("~/.embench_history")

HELP_SECTIONS = [
    ("Corpus", [
        ("build-vocab --corpus P --out P", "vocabulary file [--cap 200000 --min-count 1]"),
        ("sample --corpus P --tokens N|P% --out P", "repeat --corpus/--tokens to mix corpora [--seed 1]"),
    ]),
    ("Training", [
        ("train --model KIND --corpus P --vocab P --out DIR", "checkpoints + run log per iteration"),
        ("", "--dim 50 --window 5 --negatives 5 --subsample 1e-4 --lr 0.1 --iters N"),
        ("", "--threads N --batch 32 --early-stop none|val-loss|task:NAME --patience 2"),
        ("", "--eval TASK=DATA (avg=TRAIN,TEST) | --eval-bundle P  --config P"),
        ("sweep ... --dims 10,20,50,100,200", "one train run per dimensionality"),
    ]),
    ("Evaluation", [
        ("eval --embedding P --task T --data P", "ws|tfl|sem|syn|analogy|avg [--train-data P]"),
        ("neighbors --embedding P --word W --k K", "nearest neighbors by cosine"),
        ("compare --task T=P ... --embedding N=P ...", "PGR report [--random-dim D --seed S]"),
        ("strategies --log P ...", "early-stopping win counts [--baseline T=V]"),
    ]),
    ("Other", [
        ("help [command]", "show help"),
        ("exit", "exit the shell"),
        ("", "every command takes --verbose / --quiet / --help"),
    ]),
]


class EmbenchCLI(cmd.Cmd):
    """Interactive shell over the embench commands."""

    intro = ""
    prompt = "embench> "
    use_rawinput = True
    interactive = True  # Set to False for single command execution
    status = 0  # exit code of the last command

    def preloop(self):
        """Set up the CLI before starting."""
        if not self.interactive:
            return

        if os.path.exists(HISTORY_FILE):
            readline.read_history_file(HISTORY_FILE)

        enter_fullscreen()
        draw_header()

    def postloop(self):
        """Clean up after exiting."""
        if not self.interactive:
            return

        readline.write_history_file(HISTORY_FILE)
        exit_fullscreen()

    def precmd(self, line: str) -> str:
        """Pre-process command line."""
        if self.interactive:
            print(separator_line())
        if line.startswith("/"):
            line = line[1:]
        # build-vocab -> build_vocab
        parts = line.split(None, 1)
        if parts:
            parts[0] = parts[0].replace("-", "_")
            line = " ".join(parts)
        return line

    def postcmd(self, stop: bool, line: str) -> bool:
        """Post-process after command execution."""
        if self.interactive:
            print(separator_line())
        return stop

    def emptyline(self):
        """Do nothing on empty input."""
        pass

    def default(self, line: str):
        """Handle unknown commands."""
        print(f"Unknown command: {line}", file=sys.stderr)
        print("Type 'help' for available commands.", file=sys.stderr)
        self.status = 1

    # --- Commands ---

    def do_build_vocab(self, arg: str):
        """Build a vocabulary file. Usage: build-vocab --corpus PATH --out PATH [--cap N] [--min-count M]"""
        self.status = run_command(handle_build_vocab, arg)

    def do_sample(self, arg: str):
        """Sample and mix corpora. Usage: sample --corpus PATH --tokens N|P% [...] --out PATH [--seed S]"""
        self.status = run_command(handle_sample, arg)

    def do_train(self, arg: str):
        """Train a model. Usage: train --model KIND --corpus PATH --vocab PATH --out DIR [flags]"""
        self.status = run_command(handle_train, arg)

    def do_sweep(self, arg: str):
        """Train one model per dimensionality. Usage: sweep --dims 10,20,50 [train flags]"""
        self.status = run_command(handle_sweep, arg)

    def do_eval(self, arg: str):
        """Evaluate an embedding. Usage: eval --embedding PATH --task TASK --data PATH [--train-data PATH]"""
        self.status = run_command(handle_eval, arg)

    def do_neighbors(self, arg: str):
        """Nearest neighbors. Usage: neighbors --embedding PATH --word W [--k K]"""
        self.status = run_command(handle_neighbors, arg)

    def do_compare(self, arg: str):
        """PGR report. Usage: compare --task NAME=DATA ... --embedding NAME=PATH ... [--random-dim D]"""
        self.status = run_command(handle_compare, arg)

    def do_strategies(self, arg: str):
        """Stopping-strategy win counts. Usage: strategies --log PATH ... [--baseline TASK=VALUE]"""
        self.status = run_command(handle_strategies, arg)

    def do_exit(self, arg: str):
        """Exit the CLI."""
        return True

    def do_quit(self, arg: str):
        """Exit the CLI."""
        return True

    def do_EOF(self, arg: str):
        """Handle Ctrl+D."""
        print()
        return True

    def do_help(self, arg: str):
        """Show available commands."""
        if arg:
            super().do_help(arg.replace("-", "_"))
        else:
            print(help_table(HELP_SECTIONS))


def main():
    """Run the interactive CLI or execute a single command."""
    if len(sys.argv) > 1:
        # Execute command directly without interactive mode
        cli = EmbenchCLI()
        cli.interactive = False
        cli.onecmd(cli.precmd(shlex.join(sys.argv[1:])))
        sys.exit(cli.status)
    else:
        try:
            EmbenchCLI().cmdloop()
        except KeyboardInterrupt:
            exit_fullscreen()
            print()
