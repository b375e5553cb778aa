#include <assert.h>
long power_mod(long base, long exp, long mod);

int main(void)
{
    assert(power_mod(2, 10, 1000) == 24);
    assert(power_mod(3, 0, 7) == 1);
    assert(power_mod(7, 13, 11) == 2);
    return 0;
}
