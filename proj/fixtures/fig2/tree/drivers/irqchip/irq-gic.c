#include <linux/irqchip/arm-gic.h>

#ifdef CONFIG_GIC_NON_BANKED
static void enable_frankengic(void)
{
	static_branch_enable(&frankengic_key);
}
#else
#define enable_frankengic()	do { } while (0)
#endif

static int gic_init_bases(void)
{
	enable_frankengic();
	return 0;
}
