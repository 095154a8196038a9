int pm_init(void)
{
	return 0;
}
