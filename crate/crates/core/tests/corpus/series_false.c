int main(int argc, char **argv) {
  long long int i = 1, sn = 0;
  unsigned int n;
  long long int a = 2;
  assume(n >= 1);
  while (i <= n) {
    sn = sn + a;
    i++;
  }
  assert(sn == n * a + 1);
}
