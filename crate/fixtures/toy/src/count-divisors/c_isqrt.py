import math

n = int(input())
r = math.isqrt(n)
count = sum(2 for i in range(1, r + 1) if n % i == 0)
if r * r == n:
    count -= 1
print(count)
