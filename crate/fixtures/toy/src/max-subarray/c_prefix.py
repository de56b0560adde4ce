import sys

data = sys.stdin.buffer.read().split()
n = int(data[0])
prefix = 0
lowest = 0
best = None
for tok in data[1:1 + n]:
    prefix += int(tok)
    cand = prefix - lowest
    if best is None or cand > best:
        best = cand
    lowest = min(lowest, prefix)
print(best)
