#include <iostream>

int main() {
    int a, b;
    std::cin >> a >> b;
    unsigned s = (unsigned)a + (unsigned)b;
    std::cout << (int)s << "\n";
}
