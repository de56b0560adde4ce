n = int(input())
a = list(map(int, input().split()))
best = max(a[0], a[1])
cur = 0
for v in a:
    cur = max(v, cur + v)
    best = max(best, cur)
print(best)
