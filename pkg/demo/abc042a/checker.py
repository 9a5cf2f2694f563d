import sys


def main():
    tokens = sys.stdin.read().split()
    if len(tokens) != 3:
        sys.exit(1)
    try:
        values = [int(tok) for tok in tokens]
    except ValueError:
        sys.exit(1)
    if any(v < 1 or v > 10 for v in values):
        sys.exit(1)
    sys.exit(0)


main()
