"""Rebuilds the demo replay cache under demo/cache.

The demo ships with recorded completions so the whole pipeline runs
offline. Responses here are scripted but shaped like real ones: a mix of
correct repairs, repairs that inherit the subject's bug, near-misses,
suite failures, prose refusals, and malformed replies. Re-run this after
editing the prompt templates or the demo bundle, then commit the result.
"""

from __future__ import annotations

import random
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from dissent.bundles import load_task_bundle  # noqa: E402
from dissent.inputs import generator_prompt  # noqa: E402
from dissent.llm import ResponseCache, cache_key, render_prompt  # noqa: E402
from dissent.variants import variant_prompt  # noqa: E402

TEMPERATURE = 0.8

REPAIR_SORTED = '''The sum check is wrong: 8 + 8 + 1 also sums to 17. The program has
to compare the multiset of values against {5, 5, 7}.

```python
a, b, c = map(int, input().split())
if sorted((a, b, c)) == [5, 5, 7]:
    print("YES")
else:
    print("NO")
```
'''

REPAIR_SORTED_ALT = '''```python
values = sorted(map(int, input().split()))
print("YES" if values == [5, 5, 7] else "NO")
```
'''

REPAIR_COUNTS = '''The fix is to require exactly two fives and one seven.

```python
nums = [int(x) for x in input().split()]
if nums.count(5) == 2 and nums.count(7) == 1:
    print("YES")
else:
    print("NO")
```
'''

REPAIR_COUNTER = '''```python
from collections import Counter

a, b, c = map(int, input().split())
if Counter((a, b, c)) == Counter((5, 7, 5)):
    print("YES")
else:
    print("NO")
```
'''

SUM17_CLONE = '''The program looks mostly right; I tidied it up.

```python
x, y, z = map(int, input().split())
total = x + y + z
if total == 17:
    print("YES")
else:
    print("NO")
```
'''

SET_NEAR_REPAIR = '''The values have to be fives and sevens, so compare as a set.

```python
a, b, c = map(int, input().split())
if set((a, b, c)) == {5, 7}:
    print("YES")
else:
    print("NO")
```
'''

LOWERCASE_BUG = '''```python
a, b, c = map(int, input().split())
print("yes" if sorted((a, b, c)) == [5, 5, 7] else "no")
```
'''

PROSE_ONLY = (
    "I reviewed the program carefully. The condition on the sum is too "
    "permissive, but without more context about the judge I cannot commit "
    "to a fix here."
)

SYNTAX_ERROR = '''```python
a, b, c = map(int, input().split()
if sorted((a, b, c) == [5, 5, 7]:
    print("YES")
```
'''

ALWAYS_YES = '''```python
a, b, c = map(int, input().split())
print("YES")
```
'''

ALWAYS_NO = '''```python
print("NO")
```
'''

MULTILINE_READER = '''```python
a = int(input())
b = int(input())
c = int(input())
print("YES" if sorted((a, b, c)) == [5, 5, 7] else "NO")
```
'''

PUT_GUIDED = [
    REPAIR_SORTED,        # 0 correct repair
    SUM17_CLONE,          # 1 inherits the subject's bug, passes the suite
    REPAIR_SORTED_ALT,    # 2 correct repair, different shape
    SET_NEAR_REPAIR,      # 3 passes the suite but wrong on e.g. 5 7 7
    "NO_BUGS_FOUND",      # 4 no-op repair
    PROSE_ONLY,           # 5 dropped at the parse screen
    REPAIR_COUNTS,        # 6 correct repair
    LOWERCASE_BUG,        # 7 fails the suite, filtered out
    SYNTAX_ERROR,         # 8 dropped at the parse screen
    REPAIR_COUNTER,       # 9 correct repair
]

SPEC_ONLY = [
    REPAIR_SORTED,        # 0 correct
    ALWAYS_YES,           # 1 passes the one-test suite, junk otherwise
    REPAIR_SORTED_ALT,    # 2 correct
    LOWERCASE_BUG,        # 3 fails the suite
    SUM17_CLONE,          # 4 converged on the same wrong idea
    PROSE_ONLY,           # 5 dropped at the parse screen
    REPAIR_COUNTS,        # 6 correct
    ALWAYS_NO,            # 7 fails the suite
    REPAIR_COUNTER,       # 8 correct
    MULTILINE_READER,     # 9 crashes on one-line input, fails the suite
]

GENERATOR_SCRIPT = '''Each value is an integer between 1 and 10, so a uniform triple works.

```python
import random
import sys

rng = random.Random(int(sys.argv[1]))
print(rng.randint(1, 10), rng.randint(1, 10), rng.randint(1, 10))
```
'''

INVALID_INPUTS = [
    "5 7",
    "0 7 5",
    "12 4 1",
    "five seven five",
    "11 2 4",
    "5 7 5 5",
    "0 8 9",
]

SUM17_TRAPS = [
    "9 4 4",
    "10 6 1",
    "8 6 3",
    "7 7 3",
    "10 5 2",
    "6 6 5",
    "9 7 1",
    "8 8 1",
    "10 4 3",
    "6 9 2",
]


def direct_input_texts(n: int) -> list[str]:
    rng = random.Random(20250817)
    texts = []
    for i in range(n):
        if i % 9 == 4:
            texts.append(INVALID_INPUTS[(i // 9) % len(INVALID_INPUTS)])
        elif i % 9 == 7:
            texts.append(SUM17_TRAPS[(i // 9) % len(SUM17_TRAPS)])
        elif i % 23 == 11:
            texts.append("5 7 5")
        else:
            texts.append(
                f"{rng.randint(1, 10)} {rng.randint(1, 10)} {rng.randint(1, 10)}"
            )
    return texts


def main() -> None:
    task = load_task_bundle(REPO / "demo" / "abc042a")
    cache_dir = REPO / "demo" / "cache"
    if cache_dir.exists():
        shutil.rmtree(cache_dir)
    cache = ResponseCache(cache_dir)

    written = 0
    for i, text in enumerate(PUT_GUIDED):
        req = variant_prompt(task, "put_guided", i, temperature=TEMPERATURE)
        cache.write(cache_key(req), text)
        written += 1
    for i, text in enumerate(SPEC_ONLY):
        req = variant_prompt(task, "spec_only", i, temperature=TEMPERATURE)
        cache.write(cache_key(req), text)
        written += 1

    req = generator_prompt(task, temperature=TEMPERATURE)
    cache.write(cache_key(req), GENERATOR_SCRIPT)
    written += 1

    for i, text in enumerate(direct_input_texts(100)):
        req = render_prompt(
            "direct_inputs",
            {"specification": task.specification},
            temperature=TEMPERATURE,
            sample_index=i,
        )
        cache.write(cache_key(req), text)
        written += 1

    print(f"wrote {written} cached responses to {cache_dir}")


if __name__ == "__main__":
    main()
