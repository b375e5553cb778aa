#include <assert.h>
int is_prime(int n);

int main(void)
{
    assert(is_prime(2));
    assert(!is_prime(1));
    assert(is_prime(97));
    assert(!is_prime(91));
    return 0;
}
