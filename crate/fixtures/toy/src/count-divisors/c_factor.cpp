#include <iostream>

int main() {
    long long n;
    std::cin >> n;
    long long result = 1;
    for (long long p = 2; p * p <= n; ++p) {
        int e = 0;
        while (n % p == 0) {
            n /= p;
            ++e;
        }
        result *= e + 1;
    }
    if (n > 1) result *= 2;
    std::cout << result << "\n";
}
