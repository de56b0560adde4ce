import sys

data = sys.stdin.read().split()
n = int(data[0])
a = list(map(int, data[1:1 + n]))
best = a[0]
cur = 0
for v in a:
    cur = max(v, cur + v)
    best = max(best, cur)
print(best)
