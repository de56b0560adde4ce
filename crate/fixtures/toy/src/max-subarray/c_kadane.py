n = int(input())
a = list(map(int, input().split()))
best = cur = a[0]
for v in a[1:]:
    cur = v if cur < 0 else cur + v
    if cur > best:
        best = cur
print(best)
