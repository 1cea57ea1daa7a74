#!/usr/bin/env python3
"""Regenerate the bundled UCI-style benchmark datasets.

Both files are fully determined by their published generating rules, so no
download is needed and the bytes are reproducible:

* tictactoe.csv — every legal end-of-game tic-tac-toe board with x moving
  first (the game stops at a three-in-a-row or a full board); the class is
  'positive' when x holds a three-in-a-row.  958 rows: 626 positive, 332
  negative (316 o-wins plus 16 draws).
* balance.csv — the full 5^4 grid of (weight, distance) settings on both
  arms of a balance scale; the class compares the two torque products.
  625 rows: 288 L, 49 B, 288 R.

Run from anywhere: output lands in <repo>/data/.
"""

from itertools import product
from pathlib import Path

LINES = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]

TICTAC_COLUMNS = [
    "top-left", "top-middle", "top-right",
    "middle-left", "middle-middle", "middle-right",
    "bottom-left", "bottom-middle", "bottom-right",
    "class",
]

BALANCE_COLUMNS = ["class", "left-weight", "left-distance", "right-weight", "right-distance"]


def _winner(board):
    for a, b, c in LINES:
        if board[a] != "b" and board[a] == board[b] == board[c]:
            return board[a]
    return None


def tictac_rows():
    finals = set()

    def play(board, player):
        if _winner(board) or "b" not in board:
            finals.add(tuple(board))
            return
        nxt = "o" if player == "x" else "x"
        for i, cell in enumerate(board):
            if cell == "b":
                board[i] = player
                play(board, nxt)
                board[i] = "b"

    play(["b"] * 9, "x")
    rows = []
    for board in sorted(finals):
        label = "positive" if _winner(board) == "x" else "negative"
        rows.append(list(board) + [label])
    return rows


def balance_rows():
    rows = []
    for lw, ld, rw, rd in product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        label = "B" if left == right else ("L" if left > right else "R")
        rows.append([label, str(lw), str(ld), str(rw), str(rd)])
    return rows


def write_csv(path: Path, columns, rows):
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def main():
    data_dir = Path(__file__).resolve().parent.parent / "data"
    data_dir.mkdir(exist_ok=True)

    rows = tictac_rows()
    assert len(rows) == 958, len(rows)
    assert sum(1 for r in rows if r[-1] == "positive") == 626
    write_csv(data_dir / "tictactoe.csv", TICTAC_COLUMNS, rows)

    rows = balance_rows()
    assert len(rows) == 625
    assert sum(1 for r in rows if r[0] == "B") == 49
    write_csv(data_dir / "balance.csv", BALANCE_COLUMNS, rows)

    print(f"wrote {data_dir / 'tictactoe.csv'} and {data_dir / 'balance.csv'}")


if __name__ == "__main__":
    main()
