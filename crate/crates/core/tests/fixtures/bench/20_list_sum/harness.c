#include <assert.h>
struct node { int value; struct node *next; };
int list_sum(const struct node *head);
static struct node c = {3, 0}, b = {20, &c}, a = {100, &b};

int main(void)
{
    assert(list_sum(&a) == 123);
    assert(list_sum(&c) == 3);
    return 0;
}
