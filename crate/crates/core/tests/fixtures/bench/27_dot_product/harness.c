#include <assert.h>
double dot_product(const double *u, const double *v, int dim);
static const double u[] = {1.0, 2.0, 3.0}, v[] = {4.0, -5.0, 6.0};

int main(void)
{
    assert(dot_product(u, v, 3) == 12.0);
    assert(dot_product(u, v, 0) == 0.0);
    return 0;
}
