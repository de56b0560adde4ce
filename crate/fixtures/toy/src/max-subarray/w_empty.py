n = int(input())
a = list(map(int, input().split()))
best = cur = 0
for v in a:
    cur = max(0, cur + v)
    best = max(best, cur)
print(best)
