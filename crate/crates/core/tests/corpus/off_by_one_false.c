int main() {
  int i = 0;
  while (i < 5) i++;
  assert(i == 4);
}
