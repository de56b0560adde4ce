// Never terminates; the optimiser cannot remove the volatile loop.
int main() {
    volatile unsigned long x = 0;
    for (;;) x = x + 1;
}
